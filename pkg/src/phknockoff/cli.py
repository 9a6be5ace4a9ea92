"""Command-line front end: ``filter``, ``derandomize``, ``pfer``, ``closed``,
``simulate``. JSON reports go to stdout with sorted keys and 1-based
variable indices."""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import evalue_engine as ee
from . import knockoff_filters as kf
from . import sim_harness as sh
from .exceptions import KnockoffError
from .importance_stats import WStatistics, read_w_csv


def _level(lo_closed: bool):
    def parse(text: str) -> float:
        try:
            val = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        ok = (0 <= val <= 1) if lo_closed else (0 < val <= 1)
        if not ok:
            bound = "[0, 1]" if lo_closed else "(0, 1]"
            raise argparse.ArgumentTypeError(f"level must lie in {bound}, got {val}")
        return val
    return parse


def _positive_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {val}")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phknockoff", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="single-run knockoff filter on a W csv")
    p.add_argument("input", help="CSV with a 'w' column (optional 'index', 'run_id')")
    p.add_argument("--method", choices=("bc", "ph", "pfer"), default="ph")
    p.add_argument("--alpha-kn", type=_level(False), default=0.2)
    p.add_argument("--nu", type=_positive_int, default=1)

    p = sub.add_parser("derandomize", help="derandomized post-hoc knockoff over k runs")
    p.add_argument("inputs", nargs="+", help="per-run W CSVs (or one CSV with run_id)")
    p.add_argument("--k", type=_positive_int, default=None, help="expected number of runs")
    p.add_argument("--alpha-kn", type=_level(False), default=0.1)
    p.add_argument("--alpha-ebh", type=_level(True), default=0.2)

    p = sub.add_parser("pfer", help="RWC per-family error rate selection")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--nu", type=_positive_int, required=True)
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--eta", type=_level(False))
    grp.add_argument("--posthoc-eta", action="store_true",
                     help="report the rejection set for every eta in {1/k, ..., 1}")

    p = sub.add_parser("closed", help="closed knockoff brute-force search (small p)")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--alpha", type=_level(False), required=True)
    p.add_argument("--alpha-kn", type=_level(False), default=0.1)

    p = sub.add_parser("simulate", help="run a simulation scenario")
    p.add_argument("--config", required=True, help="scenario JSON")
    p.add_argument("--out", required=True, help="per-replication records CSV")
    p.add_argument("--summary", required=True, help="per-method summary CSV")
    p.add_argument("--seed", type=int, default=None, help="overrides base_seed")
    p.add_argument("--jobs", type=_positive_int, default=None, help="worker processes")
    return parser


def _load_runs(paths: Sequence[str]) -> list[WStatistics]:
    runs = []
    for path in paths:
        runs.extend(read_w_csv(path))
    return runs


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _cmd_filter(args) -> None:
    runs = _load_runs([args.input])
    if len(runs) != 1:
        raise ValueError(f"filter expects a single run, found {len(runs)}")
    w = runs[0]
    if args.method == "bc":
        out = kf.filter_bc(w, args.alpha_kn)
    elif args.method == "ph":
        out = kf.filter_ph(w, args.alpha_kn)
    else:
        out = kf.filter_pfer(w, args.nu)
    _emit(out.to_dict())


def _cmd_derandomize(args) -> None:
    runs = _load_runs(args.inputs)
    if args.k is not None and len(runs) != args.k:
        raise ValueError(f"--k {args.k} given but {len(runs)} runs were read")
    _emit(ee.filter_dph(runs, args.alpha_kn, args.alpha_ebh).to_dict())


def _cmd_pfer(args) -> None:
    runs = _load_runs(args.inputs)
    if args.posthoc_eta:
        _emit([rep.to_dict() for _, rep in ee.rwc_posthoc_eta(runs, args.nu)])
    else:
        _emit(ee.rwc_rejections(runs, args.nu, args.eta).to_dict())


def _cmd_closed(args) -> None:
    runs = _load_runs(args.inputs)
    _emit(ee.closed_knockoff_search(runs, args.alpha, args.alpha_kn).to_dict())


def _cmd_simulate(args) -> None:
    scenario = sh.Scenario.from_json(args.config)
    if args.seed is not None:
        scenario.base_seed = args.seed
    records = sh.run_scenario(scenario, n_jobs=args.jobs)
    sh.write_records_csv(args.out, records)
    sh.write_summary_csv(args.summary, sh.aggregate_metrics(records))


COMMANDS = {
    "filter": _cmd_filter,
    "derandomize": _cmd_derandomize,
    "pfer": _cmd_pfer,
    "closed": _cmd_closed,
    "simulate": _cmd_simulate,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors (exit 2) and --help (exit 0)
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"phknockoff: file not found: {exc.filename}", file=sys.stderr)
        return 1
    except (KnockoffError, ValueError) as exc:
        print(f"phknockoff: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
