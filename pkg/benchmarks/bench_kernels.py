"""Time the numba kernels against their numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeats 5]

Workloads mirror what one knockoff run does: a 50-point lasso path on the
augmented design of the n=250, p=50 scenario (100 columns, one CV fold of
225 rows), the same for the logistic model, and one exhaustive closure scan
over all subsets of p=16 variables.
"""
import argparse
import time

import numpy as np

from phknockoff import _lasso_kernels as lk
from phknockoff import _subset_kernels as sk
from phknockoff.gauss_knockoffs import ar1_covariance, equicorrelated_s, sample_design, sample_knockoffs
from phknockoff.importance_stats import lambda_grid, standardize_columns


def best_of(fn, repeats):
    fn()  # warm-up (JIT compilation or cache load)
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def workloads(seed=0):
    rng = np.random.default_rng(seed)
    cov = ar1_covariance(50, 0.5)
    X = sample_design(225, cov, rng)
    Xk = sample_knockoffs(X, cov, equicorrelated_s(cov), rng)
    design = standardize_columns(np.hstack([X, Xk]))
    y = X[:, 4] * 0.5 - X[:, 20] * 0.5 + rng.standard_normal(225)
    y -= y.mean()
    G, c = design.T @ design / 225, design.T @ y / 225
    lams = lambda_grid(design, y, size=50)
    yb = (y > 0).astype(float)
    lams_b = lambda_grid(design, yb, "logistic", size=50)

    p = 16
    local_e = rng.uniform(1.0, 3.0, size=1 << p)
    local_e[0] = 0.0
    pc = sk.popcount_table(p)
    rmask = (1 << 5) - 1  # a passing R forces the full scan, no early exit

    return {
        "gauss_path (100 cols, 50 lambdas)": (
            lambda: lk.gauss_path_numba(G, c, lams, 1e-4, 10_000),
            lambda: lk.gauss_path_numpy(G, c, lams, 1e-4, 10_000),
        ),
        "logistic_path (100 cols, 50 lambdas)": (
            lambda: lk.logistic_path_numba(design, yb, lams_b, 1e-4, 10_000),
            lambda: lk.logistic_path_numpy(design, yb, lams_b, 1e-4, 10_000),
        ),
        "closure_scan (2^16 subsets)": (
            lambda: sk.closure_scan_numba(local_e, pc, rmask, 5, 1.0, 1e-12),
            lambda: sk.closure_scan_numpy(local_e, pc, rmask, 5, 1.0, 1e-12),
        ),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    print(f"{'kernel':<38}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, (fast, slow) in workloads().items():
        t_fast = best_of(fast, args.repeats)
        t_slow = best_of(slow, max(1, args.repeats // 2))
        print(f"{name:<38}{1e3 * t_fast:>12.2f}{1e3 * t_slow:>12.2f}{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
