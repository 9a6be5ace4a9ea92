"""Optional numba acceleration.

Set ``PHKNOCKOFF_DISABLE_NUMBA=1`` to force the pure-numpy/python kernels,
e.g. for debugging or on platforms without numba. The flag is read once at
import time.
"""
import os

_FLAG = os.environ.get("PHKNOCKOFF_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_ENABLED = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def jit_kernel(func):
    """Return a jitted copy of ``func`` regardless of the env flag.

    Modules expose both the jitted and the plain version and pick one by
    ``NUMBA_ENABLED``, so tests and benchmarks can compare the two in one
    process. Falls back to ``func`` itself when numba is missing.
    """
    if numba is None:  # pragma: no cover
        return func
    return numba.njit(cache=True)(func)
