"""Derandomized knockoffs: compound e-values, e-BH, post-hoc levels,
closure-set checks and the RWC per-family error rate procedure."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import _subset_kernels as sk
from .exceptions import CapabilityError
from .knockoff_filters import (
    REL_TOL,
    RunEValues,
    WLike,
    as_w,
    run_evalues,
    threshold_pfer,
    threshold_ph,
)

MAX_EXHAUSTIVE_P = 20
MAX_CLOSED_SEARCH_P = 12
FAMILY_KINDS = ("ph", "averaged", "improved", "pfer")


@dataclass(frozen=True)
class EValueVector:
    e_avg: np.ndarray
    k: int
    per_run: np.ndarray  # (k, p)

    @property
    def p(self) -> int:
        return self.e_avg.shape[0]


@dataclass(frozen=True)
class RejectionReport:
    rejections: np.ndarray  # 0-based, sorted
    alpha_or_eta: float
    certificate: dict = field(default_factory=dict)
    method: str = ""

    def to_dict(self) -> dict:
        return {
            "alpha_or_eta": float(self.alpha_or_eta),
            "certificate": dict(self.certificate),
            "method": self.method,
            "rejections": [int(i) + 1 for i in self.rejections],
        }


def average_evalues(runs: Sequence[RunEValues] | Sequence[np.ndarray]) -> EValueVector:
    """Coordinate-wise mean of the per-run e-values."""
    rows = [np.asarray(r.e if isinstance(r, RunEValues) else r, dtype=float) for r in runs]
    if not rows:
        raise ValueError("need at least one run")
    p = rows[0].shape[0]
    if any(r.shape != (p,) for r in rows):
        raise ValueError("all runs must share the same p")
    per_run = np.vstack(rows)
    return EValueVector(per_run.mean(axis=0), len(rows), per_run)


def derandomized_evalues(runs: Sequence[WLike], alpha_kn: float) -> EValueVector:
    """Compound e-values averaged over knockoff runs, each run thresholded
    at its own post-hoc stopping time."""
    evs = []
    for j, w in enumerate(runs):
        arr = as_w(w)
        evs.append(run_evalues(arr, threshold_ph(arr, alpha_kn), run_id=j))
    return average_evalues(evs)


def _as_evector(e) -> np.ndarray:
    return e.e_avg if isinstance(e, EValueVector) else np.asarray(e, dtype=float).reshape(-1)


def _descending(e: np.ndarray) -> np.ndarray:
    # descending value, ascending index on ties
    return np.lexsort((np.arange(e.size), -e))


def _ebh_index(e_sorted: np.ndarray, alpha: float) -> int:
    p = e_sorted.size
    if alpha <= 0 or p == 0:
        return 0
    i = np.arange(1, p + 1)
    ok = e_sorted * alpha * i >= p * (1 - REL_TOL)
    hits = np.flatnonzero(ok)
    return int(hits[-1]) + 1 if hits.size else 0


def ebh(e, alpha: float) -> RejectionReport:
    """e-BH: reject the ``i_ebh`` largest e-values, where ``i_ebh`` is the
    largest ``i`` with ``E_(i) >= p / (alpha * i)``."""
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    e = _as_evector(e)
    p = e.size
    i_ebh = _ebh_index(e[_descending(e)], alpha)
    if i_ebh == 0:
        rej = np.empty(0, dtype=np.int64)
    else:
        rej = np.flatnonzero(e * alpha * i_ebh >= p * (1 - REL_TOL))
    return RejectionReport(rej, float(alpha), {"rule": "ebh", "i_ebh": i_ebh}, "ebh")


def ph_from_evalues(e, alpha_ebh: float, alpha_kn: float) -> RejectionReport:
    """Post-hoc level selection on compound e-values.

    Keeps the e-BH set at ``alpha_ebh`` when nonempty and reports the
    smallest level giving that same set. Otherwise reports the smallest
    level giving any rejection, or ``alpha_kn`` with no rejections.
    """
    e = _as_evector(e)
    p = e.size
    order = _descending(e)
    e_sorted = e[order]
    i_ebh = _ebh_index(e_sorted, alpha_ebh)
    if i_ebh > 0:
        rej = np.flatnonzero(e * alpha_ebh * i_ebh >= p * (1 - REL_TOL))
        alpha = p / (i_ebh * e_sorted[i_ebh - 1])
        return RejectionReport(rej, float(alpha), {"rule": "ebh", "i_ebh": i_ebh}, "dph")
    if p == 0:
        return RejectionReport(np.empty(0, dtype=np.int64), float(alpha_kn),
                               {"rule": "none", "i_star": 0}, "dph")
    scores = e_sorted * np.arange(1, p + 1)
    best = scores.max()
    i_star = int(np.flatnonzero(scores >= best * (1 - REL_TOL))[-1]) + 1  # largest index on ties
    if scores[i_star - 1] < p * (1 - REL_TOL):
        return RejectionReport(np.empty(0, dtype=np.int64), float(alpha_kn),
                               {"rule": "none", "i_star": i_star}, "dph")
    alpha = min(p / scores[i_star - 1], 1.0)
    rej = np.flatnonzero(e >= e_sorted[i_star - 1] * (1 - REL_TOL))
    return RejectionReport(rej, float(alpha), {"rule": "argmax", "i_star": i_star}, "dph")


def filter_dph(runs: Sequence[WLike], alpha_kn: float, alpha_ebh: float) -> RejectionReport:
    """Derandomized ph-knockoff over ``k`` knockoff runs."""
    if not 0 <= alpha_ebh <= 1:
        raise ValueError(f"alpha_ebh must lie in [0, 1], got {alpha_ebh}")
    return ph_from_evalues(derandomized_evalues(runs, alpha_kn), alpha_ebh, alpha_kn)


# --- local e-value families -------------------------------------------------


@dataclass(frozen=True)
class LocalEFamily:
    """Local e-values built from per-run selection patterns.

    ``pos[j, i]`` is ``W_i^(j) >= T_j`` and ``neg[j, i]`` is ``W_i^(j) <= -T_j``.
    ``averaged``/``ph``/``pfer`` use the full negative count per run in the
    denominator; ``improved`` only counts negatives inside ``S``.
    """

    kind: str
    pos: np.ndarray
    neg: np.ndarray

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        pos = np.atleast_2d(np.asarray(self.pos, dtype=bool))
        neg = np.atleast_2d(np.asarray(self.neg, dtype=bool))
        if pos.shape != neg.shape:
            raise ValueError("pos and neg patterns must have the same shape")
        if np.any(pos & neg):
            raise ValueError("a statistic cannot be both selected and negative")
        if self.kind == "ph" and pos.shape[0] != 1:
            raise ValueError("the ph family is defined for a single run")
        object.__setattr__(self, "pos", pos)
        object.__setattr__(self, "neg", neg)

    @property
    def k(self) -> int:
        return self.pos.shape[0]

    @property
    def p(self) -> int:
        return self.pos.shape[1]

    @classmethod
    def from_runs(cls, runs: Sequence[WLike], kind: str, alpha_kn: float | None = None,
                  nu: int | None = None) -> "LocalEFamily":
        pos, neg = [], []
        for w in runs:
            arr = as_w(w)
            if kind == "pfer":
                if nu is None:
                    raise ValueError("pfer family needs nu")
                t = threshold_pfer(arr, nu).value
            else:
                if alpha_kn is None:
                    raise ValueError(f"{kind} family needs alpha_kn")
                t = threshold_ph(arr, alpha_kn).value
            pos.append(arr >= t)
            neg.append(arr <= -t)
        return cls(kind, np.array(pos), np.array(neg))

    def e_avg(self) -> np.ndarray:
        """Compound e-values implied by the pattern (full-denominator form)."""
        denom = 1.0 + self.neg.sum(axis=1)
        return self.p * (self.pos / denom[:, None]).mean(axis=0)

    def all_subsets(self) -> np.ndarray:
        """Local e-value of every ``S`` indexed by its bitmask (needs small p)."""
        p = self.p
        if p > MAX_EXHAUSTIVE_P:
            raise CapabilityError(f"exhaustive subset evaluation limited to p <= {MAX_EXHAUSTIVE_P}")
        pc = sk.popcount_table(p)
        masks = np.arange(1 << p, dtype=np.int64)
        out = np.zeros(1 << p)
        for j in range(self.k):
            n_pos = pc[masks & _bits(self.pos[j])]
            if self.kind == "improved":
                n_neg = pc[masks & _bits(self.neg[j])]
            else:
                n_neg = int(self.neg[j].sum())
            out += n_pos / (1.0 + n_neg)
        return out / self.k


def _bits(mask: np.ndarray) -> int:
    return int(sum(1 << int(i) for i in np.flatnonzero(mask)))


def _subset_mask(S, p: int) -> np.ndarray:
    arr = np.asarray(list(S) if not isinstance(S, np.ndarray) else S)
    if arr.dtype == bool:
        if arr.shape != (p,):
            raise ValueError("boolean subset mask must have length p")
        return arr
    mask = np.zeros(p, dtype=bool)
    idx = arr.astype(np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= p):
        raise ValueError("subset index out of range")
    mask[idx] = True
    return mask


def local_evalue(family: LocalEFamily, S: Iterable[int] | np.ndarray) -> float:
    """Local e-value ``E_S`` of the family for a subset ``S`` (0-based)."""
    s = _subset_mask(S, family.p)
    n_pos = (family.pos & s).sum(axis=1)
    if family.kind == "improved":
        n_neg = (family.neg & s).sum(axis=1)
    else:
        n_neg = family.neg.sum(axis=1)
    return float(np.mean(n_pos / (1.0 + n_neg)))


def averaged_subset_values(e) -> np.ndarray:
    """``(1/p) * sum_{i in S} e_i`` for every ``S``, indexed by bitmask."""
    e = _as_evector(e)
    p = e.size
    if p > MAX_EXHAUSTIVE_P:
        raise CapabilityError(f"exhaustive subset evaluation limited to p <= {MAX_EXHAUSTIVE_P}")
    out = np.zeros(1 << p)
    for b in range(p):
        half = 1 << b
        out[half : 2 * half] = out[:half] + e[b]
    return out / max(p, 1)


def closure_membership(R: Iterable[int], alpha: float, family: LocalEFamily | EValueVector | np.ndarray,
                       p: int | None = None, exhaustive: bool = False) -> bool:
    """Whether ``E_S >= FDP_S(R) / alpha`` holds for all ``S``.

    ``family`` is a run-pattern family or a plain e-vector; the latter means
    the averaged family ``E_S = (1/p) sum_{i in S} e_i``. Averaged-type
    families use an exact shortcut: only ``S`` inside ``R`` matter, and the
    worst ``S`` of each size collects the smallest e-values. Set
    ``exhaustive=True`` to scan all ``2**p`` subsets instead.
    """
    pattern = isinstance(family, LocalEFamily)
    e = family.e_avg() if pattern else _as_evector(family)
    p_fam = e.size
    p = p_fam if p is None else p
    if p != p_fam:
        raise ValueError("p does not match the family")
    rmask = _subset_mask(R, p)
    r = int(rmask.sum())
    if r == 0:
        return True
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    improved = pattern and family.kind == "improved"
    if not improved and not exhaustive:
        e_in = np.sort(e[rmask])
        m = np.arange(1, r + 1)
        return bool(np.all(np.cumsum(e_in) * r * alpha >= m * p * (1 - REL_TOL)))
    if p > MAX_EXHAUSTIVE_P:
        raise CapabilityError(f"exhaustive closure check limited to p <= {MAX_EXHAUSTIVE_P}")
    table = family.all_subsets() if pattern else averaged_subset_values(e)
    return bool(sk.closure_scan(table, sk.popcount_table(p), _bits(rmask), r, float(alpha), REL_TOL))


def max_closure_member(family: LocalEFamily, alpha: float,
                       max_p: int = MAX_CLOSED_SEARCH_P) -> tuple[np.ndarray, int]:
    """Largest ``R`` in the closure set (lexicographically first on ties).

    Returns the set and the number of candidates checked. Candidates are
    restricted to variables selected in at least one run; any other index
    would have a zero singleton e-value.
    """
    p = family.p
    if p > max_p:
        raise CapabilityError(f"closed knockoff search limited to p <= {max_p}")
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    local_e = family.all_subsets()
    pc = sk.popcount_table(p)
    universe = np.flatnonzero(family.pos.any(axis=0))
    checked = 0
    for size in range(universe.size, 0, -1):
        for cand in combinations(universe.tolist(), size):
            checked += 1
            rmask = sum(1 << i for i in cand)
            if sk.closure_scan(local_e, pc, rmask, size, float(alpha), REL_TOL):
                return np.array(cand, dtype=np.int64), checked
    return np.empty(0, dtype=np.int64), checked


def closed_knockoff_search(runs: Sequence[WLike], alpha: float, alpha_kn: float,
                           max_p: int = MAX_CLOSED_SEARCH_P) -> RejectionReport:
    """Closed knockoff: brute-force closure search with the improved family."""
    family = LocalEFamily.from_runs(runs, "improved", alpha_kn=alpha_kn)
    rej, checked = max_closure_member(family, alpha, max_p)
    return RejectionReport(rej, float(alpha),
                           {"rule": "closure", "family": "improved", "candidates_checked": checked},
                           "closed")


# --- PFER ---------------------------------------------------------------------


def _pfer_counts(runs: Sequence[WLike], nu: int) -> np.ndarray:
    rows = []
    for w in runs:
        arr = as_w(w)
        rows.append(arr >= threshold_pfer(arr, nu).value)
    if not rows:
        raise ValueError("need at least one run")
    return np.sum(rows, axis=0)


def rwc_rejections(runs: Sequence[WLike], nu: int, eta: float) -> RejectionReport:
    """Variables selected by at least a fraction ``eta`` of the PFER runs."""
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    counts = _pfer_counts(runs, nu)
    k = len(runs)
    rej = np.flatnonzero(counts >= eta * k * (1 - REL_TOL))
    return RejectionReport(rej, float(eta), {"rule": "rwc", "nu": int(nu), "k": k}, "rwc")


def rwc_posthoc_eta(runs: Sequence[WLike], nu: int) -> list[tuple[float, RejectionReport]]:
    """RWC rejection sets for every ``eta`` in ``{1/k, 2/k, ..., 1}``."""
    counts = _pfer_counts(runs, nu)
    k = len(runs)
    out = []
    for r in range(1, k + 1):
        eta = r / k
        rej = np.flatnonzero(counts >= r)
        out.append((eta, RejectionReport(rej, eta, {"rule": "rwc", "nu": int(nu), "k": k,
                                                    "r": r}, "rwc")))
    return out
