"""Gaussian model-X designs and equicorrelated knockoff copies."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import NotPositiveDefiniteError

DEFAULT_PSD_SLACK = 1.0 - 1e-6
_PSD_ATOL = 1e-8


@dataclass(frozen=True)
class KnockoffConfig:
    """Diagonal decoupling vector ``s`` and the slack used to build it."""

    s: np.ndarray
    psd_slack: float = DEFAULT_PSD_SLACK


def ar1_covariance(p: int, rho: float) -> np.ndarray:
    """AR(1) correlation matrix with entries ``rho ** |j - k|``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if not abs(rho) < 1:
        raise NotPositiveDefiniteError(f"|rho| must be < 1 for a PD AR(1) matrix, got {rho}")
    idx = np.arange(p)
    return np.power(float(rho), np.abs(idx[:, None] - idx[None, :]))


def _cholesky(cov: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{what} is not positive definite") from exc


def sample_design(n: int, cov: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. rows from N(0, cov) through a Cholesky factor."""
    cov = np.asarray(cov, dtype=float)
    p = cov.shape[0]
    chol = _cholesky(cov, "covariance")
    if n == 0:
        return np.empty((0, p))
    return rng.standard_normal((n, p)) @ chol.T


def equicorrelated_s(cov: np.ndarray, psd_slack: float = DEFAULT_PSD_SLACK) -> KnockoffConfig:
    """Equicorrelated choice ``s_j = psd_slack * min(2 * lambda_min, 1)``."""
    cov = np.asarray(cov, dtype=float)
    if not 0 < psd_slack <= 1:
        raise ValueError(f"psd_slack must lie in (0, 1], got {psd_slack}")
    if not np.allclose(np.diag(cov), 1.0):
        raise ValueError("equicorrelated construction expects a correlation matrix")
    lam_min = float(np.linalg.eigvalsh(cov)[0])
    if lam_min <= 0:
        raise NotPositiveDefiniteError(f"smallest eigenvalue {lam_min:g} is not positive")
    s = psd_slack * min(2.0 * lam_min, 1.0)
    return KnockoffConfig(s=np.full(cov.shape[0], s), psd_slack=psd_slack)


def joint_covariance(cov: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Covariance of ``(X, X_tilde)``: ``[[S, S - D], [S - D, S]]``."""
    cov = np.asarray(cov, dtype=float)
    off = cov - np.diag(s)
    return np.block([[cov, off], [off, cov]])


class GaussianKnockoffSampler:
    """Row-wise conditional sampler for Gaussian knockoffs.

    Given ``X ~ N(0, cov)``, knockoffs are drawn as
    ``X (I - cov^-1 D) + N(0, 2D - D cov^-1 D)`` with ``D = diag(s)``.
    All matrix work is done once in the constructor so the sampler can be
    reused across replications of a scenario.
    """

    def __init__(self, cov: np.ndarray, config: KnockoffConfig):
        cov = np.asarray(cov, dtype=float)
        s = np.asarray(config.s, dtype=float)
        if s.shape != (cov.shape[0],):
            raise ValueError("s must have one entry per variable")
        self.p = cov.shape[0]
        inv_d = np.linalg.solve(cov, np.diag(s))  # cov^-1 D
        self.mean_map = np.eye(self.p) - inv_d
        cond = 2.0 * np.diag(s) - np.diag(s) @ inv_d
        cond = 0.5 * (cond + cond.T)
        self.cond_cov = cond
        self.cond_factor = _psd_factor(cond)

    def sample(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.p:
            raise ValueError(f"X must have shape (n, {self.p})")
        noise = rng.standard_normal(X.shape)
        return X @ self.mean_map + noise @ self.cond_factor.T


def _psd_factor(cond: np.ndarray) -> np.ndarray:
    # Cholesky when PD, eigen square root when merely PSD (e.g. s = 0).
    try:
        return np.linalg.cholesky(cond)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(cond)
        if vals[0] < -_PSD_ATOL * max(1.0, abs(vals[-1])):
            raise NotPositiveDefiniteError(
                f"knockoff conditional covariance has eigenvalue {vals[0]:g} < 0"
            ) from None
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def sample_knockoffs(
    X: np.ndarray, cov: np.ndarray, config: KnockoffConfig, rng: np.random.Generator
) -> np.ndarray:
    """One-shot wrapper around :class:`GaussianKnockoffSampler`."""
    return GaussianKnockoffSampler(cov, config).sample(X, rng)


def write_matrix_csv(path: str | Path, matrix: np.ndarray) -> None:
    """Row-major CSV with a header row of 1-based column indices."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(range(1, matrix.shape[1] + 1))
        for row in matrix:
            writer.writerow(repr(float(v)) for v in row)


def read_matrix_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    ncol = len(rows[0]) if rows else 0
    if len(rows) <= 1:
        return np.empty((0, ncol))
    return np.array([[float(v) for v in row] for row in rows[1:]])
