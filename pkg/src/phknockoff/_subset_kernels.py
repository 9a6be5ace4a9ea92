"""Bitmask kernels for exhaustive closure checks over all subsets S of [p].

Subsets are encoded as integers; bit ``i`` set means variable ``i`` is in S.
"""
import numpy as np

from ._accel import NUMBA_ENABLED, jit_kernel


def popcount_table(p: int) -> np.ndarray:
    """``table[s]`` = number of set bits of ``s`` for ``s < 2**p``."""
    table = np.zeros(1 << p, dtype=np.int64)
    for b in range(p):
        half = 1 << b
        table[half : 2 * half] = table[:half] + 1
    return table


def _closure_scan_loops(local_e, pc, rmask, r, alpha, rel_tol):
    # True iff local_e[S] * r * alpha >= |S & R| for every S (early exit).
    ra = r * alpha
    for s in range(local_e.shape[0]):
        inter = pc[s & rmask]
        if inter > 0 and local_e[s] * ra < inter * (1.0 - rel_tol):
            return False
    return True


def closure_scan_numpy(local_e, pc, rmask, r, alpha, rel_tol):
    masks = np.arange(local_e.shape[0], dtype=np.int64)
    inter = pc[masks & rmask]
    return bool(np.all(local_e * (r * alpha) >= inter * (1.0 - rel_tol)))


closure_scan_numba = jit_kernel(_closure_scan_loops)
closure_scan = closure_scan_numba if NUMBA_ENABLED else closure_scan_numpy
