"""Single-run knockoff thresholds, filters and per-run e-values.

All infima over ``t > 0`` are taken on the finite grid of nonzero
magnitudes ``|W_i|`` plus a sentinel ``max|W| + 1``; the counting functions
are step functions, so nothing is lost. Zero statistics count neither as
positive nor as negative.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .importance_stats import WStatistics

# Relative slack for comparisons of rational quantities done in floats.
REL_TOL = 1e-12

WLike = Union[WStatistics, np.ndarray, list, tuple]


def as_w(w: WLike) -> np.ndarray:
    if isinstance(w, WStatistics):
        return w.w
    return np.asarray(w, dtype=float).reshape(-1)


def _check_level(alpha: float, name: str = "alpha_kn") -> None:
    if not 0 < alpha <= 1:
        raise ValueError(f"{name} must lie in (0, 1], got {alpha}")


@dataclass(frozen=True)
class Threshold:
    value: float
    grid: np.ndarray = field(repr=False)
    branch: str  # "ratio", "zero_negatives", "pfer" or "none"

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.value))


@dataclass(frozen=True)
class FilterOutcome:
    rejections: np.ndarray  # 0-based, sorted
    alpha_reported: float | None
    threshold: Threshold
    method: str

    def to_dict(self) -> dict:
        """JSON-ready view with 1-based indices."""
        t = self.threshold.value
        return {
            "alpha": self.alpha_reported,
            "branch": self.threshold.branch,
            "method": self.method,
            "rejections": [int(i) + 1 for i in self.rejections],
            "threshold": float(t) if np.isfinite(t) else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FilterOutcome":
        t = data["threshold"]
        threshold = Threshold(
            value=np.inf if t is None else float(t),
            grid=np.empty(0),
            branch=data.get("branch", "none"),
        )
        alpha = data["alpha"]
        return cls(
            rejections=np.array([int(i) - 1 for i in data["rejections"]], dtype=np.int64),
            alpha_reported=None if alpha is None else float(alpha),
            threshold=threshold,
            method=data["method"],
        )


@dataclass(frozen=True)
class RunEValues:
    e: np.ndarray
    run_id: int = 0


class _Counter:
    """Vectorized ``#{W >= t}`` and ``#{W <= -t}`` on the threshold grid."""

    def __init__(self, w: np.ndarray):
        self.pos = np.sort(w[w > 0])
        self.neg = np.sort(-w[w < 0])
        mags = np.concatenate([self.pos, self.neg])
        top = mags.max() if mags.size else 0.0
        self.grid = np.concatenate([np.unique(mags), [top + 1.0]])

    def n_pos(self, t):
        return self.pos.size - np.searchsorted(self.pos, t, side="left")

    def n_neg(self, t):
        return self.neg.size - np.searchsorted(self.neg, t, side="left")


def _ratio_ok(n_pos, n_neg, alpha_kn):
    # n_pos / (1 + n_neg) >= 1 / alpha_kn
    return alpha_kn * n_pos >= (1 + n_neg) * (1 - REL_TOL)


def threshold_bc(w: WLike, alpha_kn: float) -> Threshold:
    """Knockoff stopping time; ``inf`` when the ratio condition never holds."""
    _check_level(alpha_kn)
    cnt = _Counter(as_w(w))
    ok = _ratio_ok(cnt.n_pos(cnt.grid), cnt.n_neg(cnt.grid), alpha_kn)
    hits = np.flatnonzero(ok)
    if hits.size == 0:
        return Threshold(np.inf, cnt.grid, "none")
    return Threshold(float(cnt.grid[hits[0]]), cnt.grid, "ratio")


def threshold_ph(w: WLike, alpha_kn: float) -> Threshold:
    """Post-hoc stopping time: ratio condition *or* no negatives left."""
    _check_level(alpha_kn)
    cnt = _Counter(as_w(w))
    n_pos, n_neg = cnt.n_pos(cnt.grid), cnt.n_neg(cnt.grid)
    ratio = _ratio_ok(n_pos, n_neg, alpha_kn)
    first = int(np.flatnonzero(ratio | (n_neg == 0))[0])  # sentinel always has n_neg == 0
    branch = "ratio" if ratio[first] else "zero_negatives"
    return Threshold(float(cnt.grid[first]), cnt.grid, branch)


def threshold_pfer(w: WLike, nu: int) -> Threshold:
    """Smallest grid ``t`` with at most ``nu - 1`` statistics ``<= -t``."""
    if int(nu) != nu or nu < 1:
        raise ValueError(f"nu must be a positive integer, got {nu}")
    cnt = _Counter(as_w(w))
    first = int(np.flatnonzero(cnt.n_neg(cnt.grid) <= nu - 1)[0])
    return Threshold(float(cnt.grid[first]), cnt.grid, "pfer")


def selected(w: WLike, threshold: Threshold | float) -> np.ndarray:
    """0-based indices with ``W_i >= T``."""
    t = threshold.value if isinstance(threshold, Threshold) else float(threshold)
    return np.flatnonzero(as_w(w) >= t)


def filter_bc(w: WLike, alpha_kn: float) -> FilterOutcome:
    thr = threshold_bc(w, alpha_kn)
    return FilterOutcome(selected(w, thr), float(alpha_kn), thr, "bc")


def filter_ph(w: WLike, alpha_kn: float) -> FilterOutcome:
    """ph-knockoff: rejection set and post-hoc level.

    With ``T`` the post-hoc stopping time, rejects ``{W_i >= T}`` and reports
    ``(1 + #{W_i <= -T}) / #{W_i >= T}``, or ``alpha_kn`` if nothing is
    rejected.
    """
    arr = as_w(w)
    thr = threshold_ph(arr, alpha_kn)
    rej = selected(arr, thr)
    if rej.size == 0:
        return FilterOutcome(rej, float(alpha_kn), thr, "ph")
    n_neg = int(np.count_nonzero(arr <= -thr.value))
    return FilterOutcome(rej, (1 + n_neg) / rej.size, thr, "ph")


def filter_pfer(w: WLike, nu: int) -> FilterOutcome:
    thr = threshold_pfer(w, nu)
    return FilterOutcome(selected(w, thr), None, thr, "pfer")


def run_evalues(w: WLike, threshold: Threshold | float, p: int | None = None,
                run_id: int | None = None) -> RunEValues:
    """``E_i = p * 1{W_i >= T} / (1 + #{W_l <= -T})``; zeros if ``T`` is infinite."""
    arr = as_w(w)
    p = arr.size if p is None else int(p)
    t = threshold.value if isinstance(threshold, Threshold) else float(threshold)
    if run_id is None:
        run_id = w.run_id if isinstance(w, WStatistics) else 0
    e = np.zeros(arr.size)
    if np.isfinite(t):
        m = int(np.count_nonzero(arr <= -t))
        e[arr >= t] = p / (1 + m)
    return RunEValues(e, run_id)
