"""Lasso importance scores on the augmented design and knockoff W statistics."""
from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _lasso_kernels as kernels
from .exceptions import FitError

FAMILIES = ("gaussian", "logistic")


@dataclass(frozen=True)
class FitConfig:
    family: str = "gaussian"
    lambda_rule: str = "cv"  # "cv" or "fixed"
    lam: float | None = None
    folds: int = 10
    grid_size: int = 50
    lambda_min_ratio: float = 1e-2
    max_iter: int = 10000
    tol: float = 1e-4
    standardize: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.lambda_rule not in ("cv", "fixed"):
            raise ValueError(f"unknown lambda_rule {self.lambda_rule!r}")
        if self.lambda_rule == "fixed" and (self.lam is None or self.lam < 0):
            raise ValueError("fixed lambda rule needs lam >= 0")
        if self.lambda_rule == "cv" and (self.folds < 2 or self.grid_size < 1):
            raise ValueError("cv needs folds >= 2 and grid_size >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class ImportanceScores:
    z: np.ndarray
    z_tilde: np.ndarray


@dataclass(frozen=True)
class WStatistics:
    """Signed knockoff statistics of one knockoff run."""

    w: np.ndarray
    run_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float).reshape(-1))

    def __len__(self):
        return self.w.shape[0]


def antisymmetric_w(z: np.ndarray, z_tilde: np.ndarray) -> np.ndarray:
    """``f(u, v) = |u| - |v|``."""
    return np.abs(np.asarray(z, dtype=float)) - np.abs(np.asarray(z_tilde, dtype=float))


def standardize_columns(design: np.ndarray) -> np.ndarray:
    """Center columns and scale them so that ``x_j'x_j / n = 1``."""
    design = np.asarray(design, dtype=float)
    centered = design - design.mean(axis=0)
    scale = np.sqrt((centered * centered).mean(axis=0))
    bad = np.flatnonzero(~(scale > 0))
    if bad.size:
        raise FitError(f"zero-variance column(s) under standardization: {bad.tolist()}")
    return centered / scale


def _check_response(y: np.ndarray, family: str) -> np.ndarray:
    y = np.asarray(y, dtype=float).reshape(-1)
    if not np.all(np.isfinite(y)):
        raise FitError("response contains non-finite values")
    if family == "logistic" and not np.all((y == 0) | (y == 1)):
        raise FitError("logistic response must be coded 0/1")
    return y


def lambda_max(design: np.ndarray, y: np.ndarray, family: str = "gaussian") -> float:
    """Smallest penalty giving an all-zero fit."""
    n = design.shape[0]
    r = y if family == "gaussian" else y - y.mean()
    return float(np.max(np.abs(design.T @ r)) / n)


def lambda_grid(design, y, family="gaussian", size=50, min_ratio=1e-2) -> np.ndarray:
    """Log-spaced grid from ``lambda_max`` down to ``min_ratio * lambda_max``."""
    top = lambda_max(design, y, family)
    if size == 1:
        return np.array([top])
    if top <= 0:
        return np.zeros(size)
    return np.geomspace(top, top * min_ratio, size)


def _path(design, y, family, lams, tol, max_iter):
    lams = np.ascontiguousarray(lams, dtype=float)
    if family == "gaussian":
        n = design.shape[0]
        G = design.T @ design / n
        c = design.T @ y / n
        coefs, _ = kernels.gauss_path(G, c, lams, tol, max_iter)
        return coefs, np.zeros(len(lams))
    coefs, icpt, _ = kernels.logistic_path(
        np.ascontiguousarray(design), y, lams, tol, max_iter
    )
    return coefs, icpt


def fit_l1(design, y, family="gaussian", lam=0.0, tol=1e-6, max_iter=1000) -> np.ndarray:
    """Coordinate-descent L1 fit at a single penalty.

    Gaussian: minimizes ``||y - Xb||^2 / (2n) + lam |b|_1`` (no intercept;
    center the data first). Logistic: ``mean NLL + lam |b|_1`` with an
    unpenalized intercept, which is not returned.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if lam < 0:
        raise ValueError("lam must be >= 0")
    design = np.asarray(design, dtype=float)
    y = _check_response(y, family)
    coefs, _ = _path(design, y, family, np.array([float(lam)]), tol, max_iter)
    return coefs[0]


def _fold_ids(n: int, folds: int, rng: np.random.Generator) -> np.ndarray:
    ids = np.empty(n, dtype=np.int64)
    ids[rng.permutation(n)] = np.arange(n) % folds
    return ids


def _single_class_fold(ids, y, folds):
    for f in range(folds):
        test = ids == f
        for part in (y[test], y[~test]):
            if part.size and (part.min() == part.max()):
                return True
    return False


def _heldout_loss(design, y, coefs, icpt, family):
    eta = design @ coefs.T + icpt  # (n_test, n_lambda)
    if family == "gaussian":
        return np.mean((y[:, None] - eta) ** 2, axis=0)
    # mean negative log-likelihood (half deviance)
    return np.mean(np.logaddexp(0.0, eta) - y[:, None] * eta, axis=0)


def cv_select_lambda(
    design,
    y,
    family: str = "gaussian",
    folds: int = 10,
    grid: Sequence[float] | None = None,
    rng: np.random.Generator | None = None,
    tol: float = 1e-6,
    max_iter: int = 1000,
) -> float:
    """K-fold cross-validated penalty; ties go to the larger lambda."""
    design = np.asarray(design, dtype=float)
    y = _check_response(y, family)
    if grid is None:
        grid = lambda_grid(design, y, family)
    grid = np.sort(np.asarray(grid, dtype=float))[::-1]
    if grid.size == 0:
        raise ValueError("lambda grid is empty")
    if grid.size == 1:
        return float(grid[0])
    rng = np.random.default_rng() if rng is None else rng
    n = design.shape[0]
    folds = min(folds, n)
    ids = _fold_ids(n, folds, rng)
    if family == "logistic" and _single_class_fold(ids, y, folds):
        ids = _fold_ids(n, folds, rng)
        if _single_class_fold(ids, y, folds):
            raise FitError("a CV fold contains a single response class")
    losses = np.zeros(grid.size)
    for f in range(folds):
        test = ids == f
        coefs, icpt = _path(design[~test], y[~test], family, grid, tol, max_iter)
        losses += _heldout_loss(design[test], y[test], coefs, icpt, family)
    losses /= folds
    return float(grid[int(np.argmin(losses))])


def _content_order(columns: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # Seeded pseudo-random visiting order keyed on column *content*, so that
    # relabelling a variable and its knockoff leaves the solver input intact.
    key = int(rng.integers(0, 2**63)).to_bytes(8, "little")
    digests = [
        int.from_bytes(
            hashlib.blake2b(np.ascontiguousarray(col).tobytes(), key=key, digest_size=8).digest(),
            "little",
        )
        for col in columns.T
    ]
    return np.argsort(np.array(digests, dtype=np.uint64), kind="stable")


def importance_scores(X, X_tilde, y, config: FitConfig, rng: np.random.Generator) -> ImportanceScores:
    """Lasso coefficients for original and knockoff columns (Z, Z_tilde)."""
    X = np.asarray(X, dtype=float)
    X_tilde = np.asarray(X_tilde, dtype=float)
    if X.shape != X_tilde.shape:
        raise ValueError("X and X_tilde must have the same shape")
    y = _check_response(y, config.family)
    if y.shape[0] != X.shape[0]:
        raise ValueError("y length does not match the number of rows")
    p = X.shape[1]
    design = np.hstack([X, X_tilde])
    if config.standardize:
        design = standardize_columns(design)
        if config.family == "gaussian":
            y = y - y.mean()
    order = _content_order(design, rng)
    design = np.ascontiguousarray(design[:, order])
    if config.lambda_rule == "fixed":
        lam = float(config.lam)
    else:
        grid = lambda_grid(design, y, config.family, config.grid_size, config.lambda_min_ratio)
        lam = cv_select_lambda(
            design, y, config.family, config.folds, grid, rng, config.tol, config.max_iter
        )
    coef_perm = fit_l1(design, y, config.family, lam, config.tol, config.max_iter)
    coef = np.empty_like(coef_perm)
    coef[order] = coef_perm
    return ImportanceScores(z=coef[:p], z_tilde=coef[p:])


def knockoff_statistics(
    X, X_tilde, y, config: FitConfig | None = None, rng: np.random.Generator | None = None,
    run_id: int = 0,
) -> WStatistics:
    """Lasso coefficient-difference statistics ``W_i = |Z_i| - |Z~_i|``."""
    config = FitConfig() if config is None else config
    rng = np.random.default_rng() if rng is None else rng
    scores = importance_scores(X, X_tilde, y, config, rng)
    return WStatistics(antisymmetric_w(scores.z, scores.z_tilde), run_id=run_id)


def write_w_csv(path: str | Path, runs: Iterable[WStatistics]) -> None:
    """Columns ``index`` (1-based), ``w``, ``run_id``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "w", "run_id"])
        for run in runs:
            for i, val in enumerate(run.w, start=1):
                writer.writerow([i, repr(float(val)), run.run_id])


def read_w_csv(path: str | Path) -> list[WStatistics]:
    """Read W statistics; ``index`` and ``run_id`` columns are optional."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "w" not in reader.fieldnames:
            raise ValueError(f"{path}: CSV needs a 'w' column")
        groups: dict[int, list[tuple[int, float]]] = {}
        for row in reader:
            run = int(row["run_id"]) if row.get("run_id") not in (None, "") else 0
            entries = groups.setdefault(run, [])
            idx = int(row["index"]) if row.get("index") not in (None, "") else len(entries) + 1
            entries.append((idx, float(row["w"])))
    runs = []
    for run_id in sorted(groups):
        entries = sorted(groups[run_id])
        idx = [i for i, _ in entries]
        if idx != list(range(1, len(idx) + 1)):
            raise ValueError(f"{path}: run {run_id} indices must be 1..p")
        runs.append(WStatistics(np.array([v for _, v in entries]), run_id=run_id))
    return runs
