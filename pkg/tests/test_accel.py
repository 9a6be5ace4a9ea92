import json
import os
import subprocess
import sys

import numpy as np

from phknockoff import _lasso_kernels as lk
from phknockoff import _subset_kernels as sk
from phknockoff._accel import NUMBA_ENABLED


def test_default_dispatch_uses_numba():
    assert NUMBA_ENABLED
    assert lk.gauss_path is lk.gauss_path_numba
    assert sk.closure_scan is sk.closure_scan_numba


def test_env_flag_selects_numpy_path():
    code = (
        "import json, numpy as np\n"
        "from phknockoff import _lasso_kernels as lk, _subset_kernels as sk, filter_ph\n"
        "from phknockoff import NUMBA_ENABLED, closed_knockoff_search\n"
        "r = closed_knockoff_search([np.array([-1., 1, 1, 1, 1]), np.array([1., -1, 1, 1, 1])], 0.5, 0.5)\n"
        "print(json.dumps([NUMBA_ENABLED, lk.gauss_path is lk.gauss_path_numpy,\n"
        "                  sk.closure_scan is sk.closure_scan_numpy, r.rejections.tolist()]))\n"
    )
    env = dict(os.environ, PHKNOCKOFF_DISABLE_NUMBA="1")
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert json.loads(res.stdout) == [False, True, True, [0, 2, 3, 4]]


def test_closure_scan_paths_agree():
    rng = np.random.default_rng(0)
    for _ in range(200):
        p = int(rng.integers(1, 9))
        local_e = rng.integers(0, 12, size=1 << p) / 4.0
        local_e[0] = 0.0
        rmask = int(rng.integers(0, 1 << p))
        r = bin(rmask).count("1")
        alpha = float(rng.choice([0.2, 0.5, 1.0]))
        pc = sk.popcount_table(p)
        args = (local_e, pc, rmask, r, alpha, 1e-12)
        assert sk.closure_scan_numba(*args) == sk.closure_scan_numpy(*args)


def test_popcount_table():
    assert sk.popcount_table(3).tolist() == [0, 1, 1, 2, 1, 2, 2, 3]
