"""Sweep harness: seeded trials over a grid of m, CSV output and slope fits.

Per-trial seeds come from :func:`hash64`, a SplitMix64 finalizer folded over
``(master_seed, m, trial)``, so any (m, trial) cell can be rerun in isolation.
"""
from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import NormEstimateUndefined
from .metrics import AnnulusParams, dist, dist_d, dist_n
from .objective import LossContext
from .sensing import check_seed, gaussian_ensemble, make_rng, quantize, quantize_linear, standard_normal
from .solvers import NBIHT_ETA, SolverConfig, biht_1bspr, default_eta, gd_1bpr, nbiht_baseline, pbp_init
from .spectral import SpectralEstimate, estimate_from_matrix, spectral_matrix, support_estimate
from .theory import hdm_oracle_2d

_MASK64 = (1 << 64) - 1
SOLVERS = ("gd1bpr", "biht1bspr", "nbiht", "hdm2d", "si1bpr")
SIGNALS = ("sphere", "annulus", "sparse_sphere", "sparse_annulus")
CSV_HEADER = ("m", "trial", "seed", "dist", "dist_d", "dist_n", "iters_run", "wall_ms")


def _splitmix(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def hash64(*parts: int) -> int:
    """Fold ``h <- splitmix64(h ^ part)`` over the parts, starting from 0."""
    h = 0
    for p in parts:
        h = _splitmix(h ^ (int(p) & _MASK64))
    return h


def parse_tau_rule(rule: str, ann: AnnulusParams) -> float:
    """``"fixed:<v>"`` or ``"sqrt_ab"`` (``tau = sqrt(alpha beta)``)."""
    if rule == "sqrt_ab":
        return math.sqrt(ann.alpha * ann.beta)
    if rule.startswith("fixed:"):
        tau = float(rule.split(":", 1)[1])
        if not tau > 0:
            raise ValueError("tau must be positive")
        return tau
    raise ValueError(f"unknown tau rule {rule!r}")


def sample_signal(kind: str, n: int, k: int | None, ann: AnnulusParams, seed: int) -> np.ndarray:
    """Uniform direction (on a random k-subset for sparse kinds), norm 1 or uniform on [alpha, beta]."""
    if kind not in SIGNALS:
        raise ValueError(f"unknown signal distribution {kind!r}")
    rng = make_rng(seed)
    sparse = kind.startswith("sparse")
    if sparse:
        if k is None or not 1 <= k <= n:
            raise ValueError(f"sparse signals need 1 <= k <= n, got k={k}")
        support = np.sort(rng.choice(n, size=k, replace=False))
    else:
        support = np.arange(n)
    g = standard_normal(rng, support.size)
    x = np.zeros(n)
    x[support] = g / np.linalg.norm(g)
    if kind.endswith("annulus"):
        x *= ann.alpha + (ann.beta - ann.alpha) * rng.random()
    return x


@dataclass(frozen=True)
class SweepSpec:
    n: int
    m_list: tuple[int, ...]
    trials: int
    seed: int = 0
    solver: str = "gd1bpr"
    iters: int = 150
    k: int | None = None
    solver_k: int | None = None
    alpha: float = 1.0
    beta: float = 1.0
    tau_rule: str = "fixed:1"
    signal: str | None = None
    power_iters: int = 50
    timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "m_list", tuple(int(m) for m in self.m_list))
        if not self.m_list or any(b <= a for a, b in zip(self.m_list, self.m_list[1:])):
            raise ValueError("m_list must be nonempty and strictly ascending")
        if self.m_list[0] < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.solver in ("biht1bspr", "nbiht") and self.sparsity is None:
            raise ValueError(f"{self.solver} needs k")
        if self.solver == "hdm2d" and self.n != 2:
            raise ValueError("hdm2d needs n == 2")
        if self.signal_kind.startswith("sparse") and self.k is None:
            raise ValueError("sparse signals need k")
        check_seed(self.seed)
        self.annulus  # validates alpha/beta
        parse_tau_rule(self.tau_rule, self.annulus)

    @property
    def annulus(self) -> AnnulusParams:
        return AnnulusParams(self.alpha, self.beta)

    @property
    def tau(self) -> float:
        return parse_tau_rule(self.tau_rule, self.annulus)

    @property
    def sparsity(self) -> int | None:
        return self.solver_k if self.solver_k is not None else self.k

    @property
    def signal_kind(self) -> str:
        if self.signal is not None:
            return self.signal
        base = "annulus" if self.alpha < self.beta else "sphere"
        return f"sparse_{base}" if self.k is not None else base


@dataclass
class EstimateReport:
    m: int
    trial: int
    seed: int
    dist: float
    dist_d: float
    dist_n: float
    iters_run: int
    wall_ms: float
    init_failed: bool = field(default=False, compare=False)

    def csv_row(self) -> list[str]:
        return [str(self.m), str(self.trial), str(self.seed), repr(self.dist), repr(self.dist_d),
                repr(self.dist_n), str(self.iters_run), f"{self.wall_ms:.3f}"]


def _spectral(A, y, tau, spec: SweepSpec, seed: int) -> tuple[SpectralEstimate, bool]:
    """SI-1bPR or SI-1bSPR; a degenerate bit vector falls back to the annulus midpoint norm."""
    S = spectral_matrix(A, y)
    support = support_estimate(S, spec.sparsity) if spec.solver == "biht1bspr" else None
    frac = float(np.count_nonzero(y == 1)) / y.size
    try:
        return estimate_from_matrix(S, frac, tau, spec.power_iters, seed, support), False
    except NormEstimateUndefined:
        est = estimate_from_matrix(S, 0.5, 1.0, spec.power_iters, seed, support)
        mid = 0.5 * (spec.alpha + spec.beta)
        return SpectralEstimate(est.direction, mid, est.support), True


def run_trial(spec: SweepSpec, m: int, trial: int) -> EstimateReport:
    seed = hash64(spec.seed, m, trial)
    start = time.perf_counter()
    tau = spec.tau
    x = sample_signal(spec.signal_kind, spec.n, spec.k, spec.annulus, hash64(seed, 1))
    A = gaussian_ensemble(m, spec.n, hash64(seed, 2)).rows
    failed = False
    iters = 0
    if spec.solver == "nbiht":
        y = quantize_linear(A, x)
        cfg = SolverConfig(eta=NBIHT_ETA, max_iters=spec.iters, k=spec.sparsity)
        res = nbiht_baseline(A, y, pbp_init(A, y, spec.sparsity), cfg)
        x_hat, iters = res.final, res.iters_run
    elif spec.solver == "hdm2d":
        y = quantize(A, x, tau)
        x_hat = hdm_oracle_2d(A, y, tau, spec.annulus)
    else:
        y = quantize(A, x, tau)
        est, failed = _spectral(A, y, tau, spec, hash64(seed, 3))
        x_hat = est.x_hat
        if spec.solver != "si1bpr":
            ctx = LossContext(A, tau, y)
            k = spec.sparsity if spec.solver == "biht1bspr" else None
            cfg = SolverConfig(eta=default_eta(tau), max_iters=spec.iters, k=k)
            res = (biht_1bspr if k else gd_1bpr)(ctx, x_hat, cfg)
            x_hat, iters = res.final, res.iters_run
    wall = (time.perf_counter() - start) * 1e3 if spec.timing else 0.0
    return EstimateReport(m, trial, seed, dist(x_hat, x), dist_d(x_hat, x), dist_n(x_hat, x),
                          iters, wall, failed)


def thread_count() -> int:
    """Worker threads: ``PHASEBIT_THREADS`` if set, else the CPU count."""
    env = os.environ.get("PHASEBIT_THREADS")
    if env:
        count = int(env)
        if count < 1:
            raise ValueError("PHASEBIT_THREADS must be >= 1")
        return count
    return os.cpu_count() or 1


def run_sweep(spec: SweepSpec, threads: int | None = None) -> list[EstimateReport]:
    """All (m, trial) cells in (m, trial) order regardless of completion order."""
    cells = [(m, t) for m in spec.m_list for t in range(spec.trials)]
    workers = threads or thread_count()
    if workers == 1:
        return [run_trial(spec, m, t) for m, t in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: run_trial(spec, *c), cells))


def reports_to_csv(reports, out=None) -> str:
    """CSV text (also written to ``out`` if given). ``wall_ms`` is 0 unless timing was on."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow(r.csv_row())
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text


def read_reports_csv(path) -> list[EstimateReport]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    kinds = {f.name: f.type for f in fields(EstimateReport)}
    out = []
    for row in rows:
        vals = {k: (float(v) if kinds[k] == "float" else int(v)) for k, v in row.items()}
        out.append(EstimateReport(**vals))
    return out


@dataclass(frozen=True)
class SweepPoint:
    m: int
    median_dist: float
    mean_dist: float
    median_dist_d: float
    median_dist_n: float
    failures: int


def summarize(reports) -> list[SweepPoint]:
    by_m: dict[int, list[EstimateReport]] = {}
    for r in reports:
        by_m.setdefault(r.m, []).append(r)
    out = []
    for m in sorted(by_m):
        rs = by_m[m]
        d = np.array([r.dist for r in rs])
        out.append(SweepPoint(m, float(np.median(d)), float(d.mean()),
                              float(np.median([r.dist_d for r in rs])),
                              float(np.median([r.dist_n for r in rs])),
                              sum(r.init_failed for r in rs)))
    return out


def fit_loglog_slope(points) -> tuple[float, float]:
    """Least-squares line through ``(ln m, ln err)``: returns (slope, intercept)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two (m, err) points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise ValueError("log-log fit needs positive finite data")
    slope, intercept = np.polyfit(np.log(pts[:, 0]), np.log(pts[:, 1]), 1)
    return float(slope), float(intercept)


def median_slope(reports, key: str = "median_dist") -> float:
    return fit_loglog_slope([(p.m, getattr(p, key)) for p in summarize(reports)])[0]
