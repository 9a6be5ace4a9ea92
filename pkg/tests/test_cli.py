import json
import subprocess
import sys

import pytest

from phknockoff.cli import main
from phknockoff.importance_stats import WStatistics, write_w_csv
from phknockoff.knockoff_filters import FilterOutcome, filter_ph


def _w_file(tmp_path, name, values, run_id=0):
    path = tmp_path / name
    write_w_csv(path, [WStatistics(values, run_id=run_id)])
    return str(path)


def _run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_filter_ph(tmp_path, capsys):
    code, out, _ = _run(capsys, ["filter", _w_file(tmp_path, "w.csv", [5, 4, -1]),
                                 "--method", "ph", "--alpha-kn", "0.2"])
    assert code == 0
    report = json.loads(out)
    assert report["rejections"] == [1, 2] and report["alpha"] == 0.5
    assert list(report) == sorted(report)


def test_filter_round_trip(tmp_path, capsys):
    path = _w_file(tmp_path, "w.csv", [7, -1, -2, 0.5])
    _, out, _ = _run(capsys, ["filter", path, "--method", "ph"])
    back = FilterOutcome.from_dict(json.loads(out))
    direct = filter_ph([7, -1, -2, 0.5], 0.2)
    assert back.rejections.tolist() == direct.rejections.tolist()
    assert back.alpha_reported == direct.alpha_reported
    assert back.threshold.value == direct.threshold.value
    assert back.threshold.branch == direct.threshold.branch


def test_filter_bc_and_pfer(tmp_path, capsys):
    path = _w_file(tmp_path, "w.csv", [3, 2, -1])
    _, out, _ = _run(capsys, ["filter", path, "--method", "bc"])
    assert json.loads(out)["rejections"] == [] and json.loads(out)["threshold"] is None
    _, out, _ = _run(capsys, ["filter", path, "--method", "pfer", "--nu", "1"])
    assert json.loads(out)["rejections"] == [1, 2] and json.loads(out)["alpha"] is None


@pytest.mark.parametrize("argv", [
    ["filter", "x.csv", "--alpha-kn", "1.5"],
    ["filter", "x.csv", "--alpha-kn", "0"],
    ["derandomize", "x.csv", "--alpha-ebh", "-0.1"],
    ["pfer", "x.csv", "--nu", "0", "--eta", "0.5"],
    ["filter", "x.csv", "--unknown-flag"],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = _run(capsys, argv)
    assert code == 2 and err


def test_missing_file_exits_1(tmp_path, capsys):
    code, _, err = _run(capsys, ["filter", str(tmp_path / "nope.csv")])
    assert code == 1 and "not found" in err


def test_derandomize(tmp_path, capsys):
    a = _w_file(tmp_path, "a.csv", [-1, 1, 1, 1, 1])
    b = _w_file(tmp_path, "b.csv", [1, -1, 1, 1, 1], run_id=1)
    code, out, _ = _run(capsys, ["derandomize", a, b, "--k", "2", "--alpha-kn", "0.5", "--alpha-ebh", "0.5"])
    assert code == 0
    report = json.loads(out)
    assert report["rejections"] == [3, 4, 5]
    assert report["alpha_or_eta"] == pytest.approx(2 / 3)
    assert report["certificate"] == {"i_star": 3, "rule": "argmax"}
    code, _, _ = _run(capsys, ["derandomize", a, b, "--k", "3"])
    assert code == 1


def test_pfer_and_posthoc_eta(tmp_path, capsys):
    a = _w_file(tmp_path, "a.csv", [3, 2, 0])
    b = _w_file(tmp_path, "b.csv", [0, 2, 0], run_id=1)
    _, out, _ = _run(capsys, ["pfer", a, b, "--nu", "1", "--eta", "1"])
    assert json.loads(out)["rejections"] == [2]
    _, out, _ = _run(capsys, ["pfer", a, b, "--nu", "1", "--posthoc-eta"])
    grid = json.loads(out)
    assert [(g["alpha_or_eta"], g["rejections"]) for g in grid] == [(0.5, [1, 2]), (1.0, [2])]


def test_closed(tmp_path, capsys):
    a = _w_file(tmp_path, "a.csv", [-1, 1, 1, 1, 1])
    b = _w_file(tmp_path, "b.csv", [1, -1, 1, 1, 1], run_id=1)
    code, out, _ = _run(capsys, ["closed", a, b, "--alpha", "0.5", "--alpha-kn", "0.5"])
    assert code == 0 and len(json.loads(out)["rejections"]) == 4
    big = _w_file(tmp_path, "big.csv", [1.0] * 13)
    code, _, err = _run(capsys, ["closed", big, "--alpha", "0.5"])
    assert code == 1 and "p <=" in err


def _config(tmp_path):
    cfg = {"p": 12, "p_relevant": 2, "n": 80, "reps": 3, "methods": ["bc", "ph"],
           "lambda_rule": "fixed", "lam": 0.05, "base_seed": 0}
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_simulate_is_byte_identical(tmp_path, capsys):
    cfg = _config(tmp_path)
    outs = []
    for tag in ("a", "b"):
        rec, summ = tmp_path / f"r{tag}.csv", tmp_path / f"s{tag}.csv"
        assert main(["simulate", "--config", cfg, "--out", str(rec), "--summary", str(summ),
                     "--seed", "11"]) == 0
        outs.append((rec.read_bytes(), summ.read_bytes()))
    assert outs[0] == outs[1]
    rec = tmp_path / "rc.csv"
    main(["simulate", "--config", cfg, "--out", str(rec), "--summary", str(tmp_path / "sc.csv"),
          "--seed", "12"])
    assert rec.read_bytes() != outs[0][0]


def test_module_entry_point(tmp_path):
    path = _w_file(tmp_path, "w.csv", [5, 4, -1])
    res = subprocess.run([sys.executable, "-m", "phknockoff", "filter", path],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["rejections"] == [1, 2]
