"""Coordinate-descent kernels for the L1 fits.

Two implementations of each kernel: an explicit-loop version compiled with
numba and a numpy version that vectorizes the inner products. ``gauss_path``
and ``logistic_path`` point at the numba version unless
``PHKNOCKOFF_DISABLE_NUMBA`` is set. Both follow the same update order, so
they agree to rounding.
"""
import numpy as np

from ._accel import NUMBA_ENABLED, jit_kernel


def _gauss_sweep(G, c, beta, q, lam, active, n_active):
    max_delta = 0.0
    for a in range(n_active):
        j = active[a]
        gjj = G[j, j]
        if gjj <= 0.0:
            continue
        old = beta[j]
        rho = c[j] - q[j] + gjj * old
        if rho > lam:
            new = (rho - lam) / gjj
        elif rho < -lam:
            new = (rho + lam) / gjj
        else:
            new = 0.0
        delta = new - old
        if delta != 0.0:
            beta[j] = new
            for k in range(q.shape[0]):
                q[k] += delta * G[k, j]
            if abs(delta) > max_delta:
                max_delta = abs(delta)
    return max_delta


def _gauss_path_loops(G, c, lams, tol, max_iter):
    # Active-set strategy: full sweep, then iterate on the nonzero
    # coordinates until they settle, until a full sweep changes nothing.
    m = c.shape[0]
    nl = lams.shape[0]
    out = np.zeros((nl, m))
    sweeps = np.zeros(nl, dtype=np.int64)
    beta = np.zeros(m)
    q = np.zeros(m)  # G @ beta
    everything = np.arange(m)
    active = np.zeros(m, dtype=np.int64)
    for li in range(nl):
        lam = lams[li]
        it = 0
        while it < max_iter:
            it += 1
            if _gauss_sweep(G, c, beta, q, lam, everything, m) < tol:
                break
            n_active = 0
            for j in range(m):
                if beta[j] != 0.0:
                    active[n_active] = j
                    n_active += 1
            while it < max_iter:
                it += 1
                if _gauss_sweep(G, c, beta, q, lam, active, n_active) < tol:
                    break
        sweeps[li] = it
        out[li, :] = beta
    return out, sweeps


def _gauss_sweep_numpy(G, c, diag, beta, q, lam, coords):
    max_delta = 0.0
    for j in coords:
        gjj = diag[j]
        if gjj <= 0.0:
            continue
        old = beta[j]
        rho = c[j] - q[j] + gjj * old
        new = np.sign(rho) * max(abs(rho) - lam, 0.0) / gjj
        delta = new - old
        if delta != 0.0:
            beta[j] = new
            q += delta * G[:, j]
            max_delta = max(max_delta, abs(delta))
    return max_delta


def gauss_path_numpy(G, c, lams, tol, max_iter):
    """Lasso path on the Gram form ``1/2 b'Gb - c'b + lam |b|_1``.

    ``G = X'X / n`` and ``c = X'y / n``; warm starts run down ``lams``.
    Uses full sweeps alternating with sweeps over the active set.
    Returns the coefficients, shape (len(lams), m), and sweeps per lambda.
    """
    m = c.shape[0]
    diag = np.diag(G).copy()
    out = np.zeros((len(lams), m))
    sweeps = np.zeros(len(lams), dtype=np.int64)
    beta = np.zeros(m)
    q = np.zeros(m)
    everything = range(m)
    for li, lam in enumerate(lams):
        it = 0
        while it < max_iter:
            it += 1
            if _gauss_sweep_numpy(G, c, diag, beta, q, lam, everything) < tol:
                break
            active = np.flatnonzero(beta).tolist()
            while it < max_iter:
                it += 1
                if _gauss_sweep_numpy(G, c, diag, beta, q, lam, active) < tol:
                    break
        sweeps[li] = it
        out[li] = beta
    return out, sweeps


def _surrogate_sweep(H, g, d, q, pen, active, n_active):
    # CD on  g'd + 1/2 d'Hd + sum pen_j |b_j + d_j|,  with q = H d and the
    # current coefficients folded into ``d`` via ``H_jj * b_j`` offsets below.
    max_delta = 0.0
    for a in range(n_active):
        j = active[a]
        hjj = H[j, j]
        if hjj <= 0.0:
            continue
        old = d[j]
        rho = hjj * old - g[j] - q[j]
        lam = pen[j]
        if rho > lam:
            new = (rho - lam) / hjj
        elif rho < -lam:
            new = (rho + lam) / hjj
        else:
            new = 0.0
        delta = new - old
        if delta != 0.0:
            d[j] = new
            for k in range(q.shape[0]):
                q[k] += delta * H[k, j]
            if abs(delta) > max_delta:
                max_delta = abs(delta)
    return max_delta


def _logistic_path_loops(X, y, lams, tol, max_iter):
    # Majorize-minimize: the logistic Hessian is bounded by A'A / (4n) with
    # A = [1, X]. Each outer step minimizes that quadratic bound plus the
    # penalty (Gram-form CD, warm-started at the current point), so the
    # objective never increases.
    n, m = X.shape
    nl = lams.shape[0]
    ma = m + 1
    A = np.ones((n, ma))
    for i in range(n):
        for j in range(m):
            A[i, j + 1] = X[i, j]
    H = A.T @ A / (4.0 * n)
    out = np.zeros((nl, m))
    icpt = np.zeros(nl)
    sweeps = np.zeros(nl, dtype=np.int64)
    b = np.zeros(ma)
    ybar = 0.0
    for i in range(n):
        ybar += y[i]
    ybar = min(max(ybar / n, 1e-10), 1.0 - 1e-10)
    b[0] = np.log(ybar / (1.0 - ybar))
    pen = np.zeros(ma)
    g = np.zeros(ma)
    q = np.zeros(ma)
    everything = np.arange(ma)
    active = np.zeros(ma, dtype=np.int64)
    for li in range(nl):
        for j in range(1, ma):
            pen[j] = lams[li]
        it = 0
        while it < max_iter:
            it += 1
            eta = A @ b
            for i in range(n):
                eta[i] = 1.0 / (1.0 + np.exp(-eta[i])) - y[i]
            g[:] = A.T @ eta / n
            # shift so that CD runs on the new coefficients c = b + step:
            # g'(c - b) + 1/2 (c - b)'H(c - b)  ->  (g - Hb)'c + 1/2 c'Hc
            hb = H @ b
            for j in range(ma):
                g[j] -= hb[j]
            c = b.copy()
            q[:] = hb
            inner = 0
            while inner < max_iter:
                inner += 1
                if _surrogate_sweep(H, g, c, q, pen, everything, ma) < 0.1 * tol:
                    break
                n_active = 0
                for j in range(ma):
                    if c[j] != 0.0:
                        active[n_active] = j
                        n_active += 1
                while inner < max_iter:
                    inner += 1
                    if _surrogate_sweep(H, g, c, q, pen, active, n_active) < 0.1 * tol:
                        break
            step = 0.0
            for j in range(ma):
                if abs(c[j] - b[j]) > step:
                    step = abs(c[j] - b[j])
            b[:] = c
            if step < tol:
                break
        sweeps[li] = it
        out[li, :] = b[1:]
        icpt[li] = b[0]
    return out, icpt, sweeps


def _surrogate_sweep_numpy(H, diag, g, d, q, pen, coords):
    max_delta = 0.0
    for j in coords:
        hjj = diag[j]
        if hjj <= 0.0:
            continue
        old = d[j]
        rho = hjj * old - g[j] - q[j]
        new = np.sign(rho) * max(abs(rho) - pen[j], 0.0) / hjj
        delta = new - old
        if delta != 0.0:
            d[j] = new
            q += delta * H[:, j]
            max_delta = max(max_delta, abs(delta))
    return max_delta


def logistic_path_numpy(X, y, lams, tol, max_iter):
    """Penalized logistic path: ``mean NLL + lam |b|_1``, free intercept.

    Majorize-minimize with the global curvature bound ``A'A / (4n)``,
    ``A = [1, X]``: each outer step minimizes the quadratic bound plus the
    penalty by active-set coordinate descent, so the objective can only go
    down. ``max_iter`` caps outer steps (and inner sweeps per step).
    Returns (coefs (len(lams), m), intercepts, outer steps per lambda).
    """
    n, m = X.shape
    A = np.hstack([np.ones((n, 1)), X])
    ma = m + 1
    H = A.T @ A / (4.0 * n)
    diag = np.diag(H).copy()
    out = np.zeros((len(lams), m))
    icpt = np.zeros(len(lams))
    sweeps = np.zeros(len(lams), dtype=np.int64)
    b = np.zeros(ma)
    ybar = min(max(y.mean(), 1e-10), 1.0 - 1e-10)
    b[0] = np.log(ybar / (1.0 - ybar))
    everything = range(ma)
    for li, lam in enumerate(lams):
        pen = np.full(ma, lam)
        pen[0] = 0.0
        it = 0
        while it < max_iter:
            it += 1
            resid = 1.0 / (1.0 + np.exp(-(A @ b))) - y
            hb = H @ b
            g = A.T @ resid / n - hb
            c = b.copy()
            q = hb.copy()
            inner = 0
            while inner < max_iter:
                inner += 1
                if _surrogate_sweep_numpy(H, diag, g, c, q, pen, everything) < 0.1 * tol:
                    break
                active = np.flatnonzero(c).tolist()
                while inner < max_iter:
                    inner += 1
                    if _surrogate_sweep_numpy(H, diag, g, c, q, pen, active) < 0.1 * tol:
                        break
            step = np.max(np.abs(c - b))
            b = c
            if step < tol:
                break
        sweeps[li] = it
        out[li] = b[1:]
        icpt[li] = b[0]
    return out, icpt, sweeps


_gauss_sweep = jit_kernel(_gauss_sweep)
_surrogate_sweep = jit_kernel(_surrogate_sweep)
gauss_path_numba = jit_kernel(_gauss_path_loops)
logistic_path_numba = jit_kernel(_logistic_path_loops)

if NUMBA_ENABLED:
    gauss_path = gauss_path_numba
    logistic_path = logistic_path_numba
else:
    gauss_path = gauss_path_numpy
    logistic_path = logistic_path_numpy
