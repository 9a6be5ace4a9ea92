"""Monte-Carlo harness: AR(1) Gaussian designs, sparse alternating-sign
coefficients, knockoff runs, and per-method metrics."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import evalue_engine as ee
from . import knockoff_filters as kf
from .exceptions import KnockoffError
from .gauss_knockoffs import GaussianKnockoffSampler, ar1_covariance, equicorrelated_s, sample_design
from .importance_stats import FitConfig, WStatistics, knockoff_statistics

log = logging.getLogger(__name__)

METHODS = ("bc", "ph", "rb", "dph", "rwc", "closed")
DERANDOMIZED = ("rb", "dph", "rwc", "closed")
RECORD_COLUMNS = ("rep_id", "method", "n_rejections", "fdp", "alpha", "power_contrib", "failed")
SUMMARY_COLUMNS = ("method", "power", "fdr", "avg_fdp_over_alpha", "se_ratio", "mean_alpha",
                   "n_reps", "n_failed")


@dataclass
class Scenario:
    family: str = "gaussian"
    n: int = 250
    p: int = 50
    p_relevant: int = 3
    amplitude: float = 8.0
    rho: float = 0.5
    spacing: int | None = None
    alpha_kn: float = 0.2
    alpha_ebh: float = 0.4  # twice alpha_kn
    k: int = 1
    nu: int | None = None
    eta: float = 0.5
    reps: int = 100
    base_seed: int = 0
    methods: list[str] = field(default_factory=lambda: ["bc", "ph"])
    lambda_rule: str = "cv"
    lam: float | None = None
    folds: int = 10
    grid_size: int = 50
    n_jobs: int = 1

    def __post_init__(self):
        if self.family not in ("gaussian", "logistic"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not 0 <= self.p_relevant <= self.p:
            raise ValueError("p_relevant must lie in [0, p]")
        z = self.z
        if self.p_relevant and z * self.p_relevant + self.p_relevant > self.p:
            raise ValueError(f"spacing z={z} does not fit {self.p_relevant} signals into p={self.p}")
        for name in ("alpha_kn", "eta"):
            if not 0 < getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in (0, 1]")
        if not 0 <= self.alpha_ebh <= 1:
            raise ValueError("alpha_ebh must lie in [0, 1]")
        if self.k < 1 or self.reps < 0:
            raise ValueError("k must be >= 1 and reps >= 0")
        self.methods = list(self.methods)
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if "rwc" in self.methods and not self.nu:
            raise ValueError("method 'rwc' needs nu >= 1")

    @property
    def z(self) -> int:
        if self.spacing is not None:
            return int(self.spacing)
        if self.p_relevant == 0:
            return self.p
        return (self.p - self.p_relevant) // self.p_relevant

    def fit_config(self) -> FitConfig:
        return FitConfig(family=self.family, lambda_rule=self.lambda_rule, lam=self.lam,
                         folds=self.folds, grid_size=self.grid_size)

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown scenario keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "Scenario":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GroundTruth:
    beta: np.ndarray
    I1: np.ndarray
    I0: np.ndarray


@dataclass(frozen=True)
class MetricsRecord:
    rep_id: int
    method: str
    n_rejections: int
    fdp: float
    alpha: float
    power_contrib: float
    failed: bool = False
    rejections: tuple = ()
    n_false: int = 0

    def row(self) -> list:
        return [self.rep_id, self.method, self.n_rejections, repr(float(self.fdp)),
                repr(float(self.alpha)), repr(float(self.power_contrib)), int(self.failed)]


def build_beta(p: int, p_relevant: int, amplitude: float, n: int, rng: np.random.Generator,
               spacing: int | None = None) -> GroundTruth:
    """Sparse coefficients: blocks of ``z`` zeros each followed by one signal.

    Signal magnitudes are ``N(amplitude, 1)`` draws over ``sqrt(n)``, with
    alternating signs starting positive.
    """
    beta = np.zeros(p)
    if p_relevant == 0:
        return GroundTruth(beta, np.empty(0, dtype=np.int64), np.arange(p))
    z = (p - p_relevant) // p_relevant if spacing is None else int(spacing)
    if z < 0 or z * p_relevant + p_relevant > p:
        raise ValueError(f"spacing z={z} does not fit {p_relevant} signals into p={p}")
    draws = rng.normal(amplitude, 1.0, size=p_relevant)
    support = (z + 1) * np.arange(1, p_relevant + 1) - 1
    signs = np.where(np.arange(p_relevant) % 2 == 0, 1.0, -1.0)
    beta[support] = signs * draws / math.sqrt(n)
    return GroundTruth(beta, support, np.setdiff1d(np.arange(p), support))


def gen_response(X: np.ndarray, truth: GroundTruth, family: str, rng: np.random.Generator) -> np.ndarray:
    eta = X @ truth.beta
    if family == "gaussian":
        return eta + rng.standard_normal(eta.shape[0])
    if family == "logistic":
        prob = 1.0 / (1.0 + np.exp(-eta))
        return (rng.random(eta.shape[0]) < prob).astype(float)
    raise ValueError(f"unknown family {family!r}")


@dataclass(frozen=True)
class Replication:
    rep_id: int
    truth: GroundTruth
    runs: list[WStatistics]


class _Context:
    """Per-process scenario state (covariance and knockoff sampler)."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.cov = ar1_covariance(scenario.p, scenario.rho)
        self.sampler = GaussianKnockoffSampler(self.cov, equicorrelated_s(self.cov))
        self.fit = scenario.fit_config()


def rep_rng(base_seed: int, rep_id: int) -> np.random.Generator:
    return np.random.default_rng([int(base_seed), int(rep_id)])


def n_runs_needed(scenario: Scenario, methods: Iterable[str]) -> int:
    return scenario.k if any(m in DERANDOMIZED for m in methods) else 1


def simulate_replication(scenario: Scenario, rep_id: int, n_runs: int | None = None,
                         _ctx: _Context | None = None) -> Replication:
    """Fresh data, ``n_runs`` knockoff copies and their W statistics."""
    ctx = _ctx or _Context(scenario)
    n_runs = scenario.k if n_runs is None else n_runs
    rng = rep_rng(scenario.base_seed, rep_id)
    truth = build_beta(scenario.p, scenario.p_relevant, scenario.amplitude, scenario.n, rng,
                       scenario.spacing)
    X = sample_design(scenario.n, ctx.cov, rng)
    y = gen_response(X, truth, scenario.family, rng)
    runs = []
    for j in range(n_runs):
        Xk = ctx.sampler.sample(X, rng)
        runs.append(knockoff_statistics(X, Xk, y, ctx.fit, rng, run_id=j))
    return Replication(rep_id, truth, runs)


def _record(rep_id, method, rejections, alpha, truth: GroundTruth) -> MetricsRecord:
    rej = np.asarray(rejections, dtype=np.int64)
    n_false = int(np.isin(rej, truth.I0).sum())
    n_true = rej.size - n_false
    fdp = n_false / max(rej.size, 1)
    power = n_true / truth.I1.size if truth.I1.size else 0.0
    return MetricsRecord(rep_id, method, int(rej.size), fdp, float(alpha), power,
                         rejections=tuple(int(i) for i in rej), n_false=n_false)


def evaluate_methods(rep: Replication, scenario: Scenario, methods: Sequence[str]) -> list[MetricsRecord]:
    out = []
    first = rep.runs[0]
    for method in methods:
        if method == "bc":
            res = kf.filter_bc(first, scenario.alpha_kn)
            rej, alpha = res.rejections, res.alpha_reported
        elif method == "ph":
            res = kf.filter_ph(first, scenario.alpha_kn)
            rej, alpha = res.rejections, res.alpha_reported
        elif method == "rb":
            res = ee.ebh(ee.derandomized_evalues(rep.runs, scenario.alpha_kn), scenario.alpha_ebh)
            rej, alpha = res.rejections, scenario.alpha_ebh
        elif method == "dph":
            res = ee.filter_dph(rep.runs, scenario.alpha_kn, scenario.alpha_ebh)
            rej, alpha = res.rejections, res.alpha_or_eta
        elif method == "rwc":
            res = ee.rwc_rejections(rep.runs, scenario.nu, scenario.eta)
            rej, alpha = res.rejections, scenario.eta
        elif method == "closed":
            res = ee.closed_knockoff_search(rep.runs, scenario.alpha_ebh, scenario.alpha_kn)
            rej, alpha = res.rejections, scenario.alpha_ebh
        else:
            raise ValueError(f"unknown method {method!r}")
        out.append(_record(rep.rep_id, method, rej, alpha, rep.truth))
    return out


def _failed(rep_id, methods):
    nan = float("nan")
    return [MetricsRecord(rep_id, m, 0, nan, nan, nan, failed=True) for m in methods]


def _run_chunk(scenario: Scenario, methods: Sequence[str], rep_ids: Sequence[int]) -> list[MetricsRecord]:
    ctx = _Context(scenario)
    n_runs = n_runs_needed(scenario, methods)
    out = []
    for rep_id in rep_ids:
        try:
            rep = simulate_replication(scenario, rep_id, n_runs, ctx)
        except KnockoffError as exc:
            log.warning("replication %d failed: %s", rep_id, exc)
            out.extend(_failed(rep_id, methods))
            continue
        out.extend(evaluate_methods(rep, scenario, methods))
    return out


def run_scenario(scenario: Scenario, methods: Sequence[str] | None = None,
                 n_jobs: int | None = None) -> list[MetricsRecord]:
    """One record per (replication, method), ordered by rep_id then method."""
    methods = list(scenario.methods if methods is None else methods)
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    n_jobs = scenario.n_jobs if n_jobs is None else n_jobs
    rep_ids = list(range(scenario.reps))
    if n_jobs <= 1 or len(rep_ids) < 2:
        return _run_chunk(scenario, methods, rep_ids)
    chunks = [rep_ids[i::n_jobs] for i in range(n_jobs)]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        parts = pool.map(_run_chunk, [scenario] * n_jobs, [methods] * n_jobs, chunks)
        records = [r for part in parts for r in part]
    order = {m: i for i, m in enumerate(methods)}
    return sorted(records, key=lambda r: (r.rep_id, order[r.method]))


@dataclass(frozen=True)
class MethodSummary:
    method: str
    power: float
    fdr: float
    avg_fdp_over_alpha: float
    se_ratio: float
    mean_alpha: float
    n_reps: int
    n_failed: int
    se_power: float = float("nan")
    se_fdr: float = float("nan")

    def row(self) -> list:
        return [self.method] + [repr(float(getattr(self, c))) for c in SUMMARY_COLUMNS[1:6]] + [
            self.n_reps, self.n_failed]


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if x.size == 0:
        return float("nan"), float("nan")
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return float(x.mean()), se


def aggregate_metrics(records: Sequence[MetricsRecord]) -> dict[str, MethodSummary]:
    """Power, FDR and average FDP/alpha per method, with standard errors.

    Failed replications are excluded and counted in ``n_failed``.
    """
    if not records:
        raise ValueError("no records to aggregate")
    methods = list(dict.fromkeys(r.method for r in records))
    out = {}
    for m in methods:
        ok = [r for r in records if r.method == m and not r.failed]
        n_failed = sum(1 for r in records if r.method == m and r.failed)
        power, se_power = _mean_se(np.array([r.power_contrib for r in ok]))
        fdr, se_fdr = _mean_se(np.array([r.fdp for r in ok]))
        ratio, se_ratio = _mean_se(np.array([r.fdp / r.alpha for r in ok]))
        mean_alpha, _ = _mean_se(np.array([r.alpha for r in ok]))
        out[m] = MethodSummary(m, power, fdr, ratio, se_ratio, mean_alpha, len(ok), n_failed,
                               se_power, se_fdr)
    return out


def write_records_csv(path: str | Path, records: Iterable[MetricsRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow(r.row())


def write_summary_csv(path: str | Path, summary: dict[str, MethodSummary]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for s in summary.values():
            writer.writerow(s.row())


def read_records_csv(path: str | Path) -> list[MetricsRecord]:
    with open(path, newline="") as fh:
        return [
            MetricsRecord(int(row["rep_id"]), row["method"], int(row["n_rejections"]),
                          float(row["fdp"]), float(row["alpha"]), float(row["power_contrib"]),
                          bool(int(row["failed"])))
            for row in csv.DictReader(fh)
        ]
