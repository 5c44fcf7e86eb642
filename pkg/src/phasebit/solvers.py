"""Gradient descent on the one-sided l1 loss: GD-1bPR, BIHT-1bSPR and the
NBIHT baseline for classical 1-bit compressed sensing."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .metrics import AnnulusParams, dist
from .objective import LossContext, subgradient
from .sensing import check_tau, matrix_of, sign
from .theory import ratio_expression_max

RATIO_LIMIT = 0.49


def default_eta(tau: float) -> float:
    """Step size ``sqrt(pi e / 2) * tau``."""
    return math.sqrt(math.pi * math.e / 2.0) * check_tau(tau)


@dataclass(frozen=True)
class SolverConfig:
    eta: float
    max_iters: int = 150
    k: int | None = None
    tol: float = 0.0

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")


@dataclass
class SolverTrace:
    final: np.ndarray
    iters_run: int
    iterates_dist: list[float] = field(default_factory=list)


def hard_threshold(u, k: int) -> np.ndarray:
    """Keep the k largest-magnitude entries; ties go to the lower index."""
    u = np.asarray(u, dtype=np.float64)
    if not 1 <= k <= u.size:
        raise ValueError(f"k={k} outside [1, {u.size}]")
    keep = np.argsort(-np.abs(u), kind="stable")[:k]
    out = np.zeros_like(u)
    out[keep] = u[keep]
    return out


def _start(x0, n: int) -> np.ndarray:
    x = np.array(x0, dtype=np.float64)
    if x.shape != (n,):
        raise DimensionError(f"x0 length {x.shape} does not match n={n}")
    return x


def _descend(x, cfg, truth, grad, project=None):
    trace = []
    it = 0
    for it in range(1, cfg.max_iters + 1):
        new = x - cfg.eta * grad(x)
        if project is not None:
            new = project(new)
        moved = float(np.linalg.norm(new - x))
        x = new
        if truth is not None:
            trace.append(dist(x, truth))
        if moved <= cfg.tol:
            break
    return SolverTrace(x, it, trace)


def gd_1bpr(ctx: LossContext, x0, cfg: SolverConfig, truth=None) -> SolverTrace:
    """Plain gradient descent ``x <- x - eta * dL(x)``."""
    if cfg.k is not None:
        raise ValueError("gd_1bpr takes no sparsity level; use biht_1bspr")
    x = _start(x0, ctx.n)
    return _descend(x, cfg, truth, lambda u: subgradient(ctx, u))


def biht_1bspr(ctx: LossContext, x0, cfg: SolverConfig, truth=None) -> SolverTrace:
    """Gradient step followed by hard thresholding to ``cfg.k`` entries.

    A non-sparse ``x0`` is thresholded on entry.
    """
    if cfg.k is None:
        raise ValueError("biht_1bspr needs a sparsity level k")
    x = hard_threshold(_start(x0, ctx.n), cfg.k)
    return _descend(x, cfg, truth, lambda u: subgradient(ctx, u),
                    project=lambda u: hard_threshold(u, cfg.k))


def _unit(x):
    nx = np.linalg.norm(x)
    return x / nx if nx > 0 else x


NBIHT_ETA = math.sqrt(2.0 * math.pi)


def nbiht_baseline(A, y, x0, cfg: SolverConfig, truth=None, normalize: str = "each") -> SolverTrace:
    """Normalized binary IHT for bits ``y = sign(A x)``.

    Step ``T_k(x - eta * g)`` with ``g = (1/2m) sum_i (sign(a_i^T x) - y_i) a_i``.
    ``normalize="each"`` projects every iterate back to the unit sphere (with
    :data:`NBIHT_ETA` this is the usual ``sqrt(pi/2)/m`` step on
    ``A^T (y - sign(A x))``); ``"final"`` only normalizes the returned vector.
    """
    if normalize not in ("each", "final"):
        raise ValueError("normalize must be 'each' or 'final'")
    if cfg.k is None:
        raise ValueError("nbiht_baseline needs a sparsity level k")
    M = matrix_of(A)
    y = np.asarray(y, dtype=np.int8)
    if y.shape != (M.shape[0],):
        raise DimensionError(f"{y.size} bits for m={M.shape[0]} rows")
    m = M.shape[0]

    def grad(u):
        c = (sign(M @ u) - y).astype(np.float64)
        idx = np.flatnonzero(c)
        if idx.size == 0:
            return np.zeros(M.shape[1])
        return np.ascontiguousarray((M[idx] * c[idx, None]).T).sum(axis=1) / (2.0 * m)

    x = hard_threshold(_start(x0, M.shape[1]), cfg.k)
    if normalize == "each":
        x = _unit(x)
        return _descend(x, cfg, truth, grad, project=lambda u: _unit(hard_threshold(u, cfg.k)))
    res = _descend(x, cfg, truth, grad, project=lambda u: hard_threshold(u, cfg.k))
    res.final = _unit(res.final)
    return res


def pbp_init(A, y, k: int) -> np.ndarray:
    """Projected back-projection ``T_k(A^T y)``, normalized."""
    M = matrix_of(A)
    return _unit(hard_threshold(M.T @ np.asarray(y, dtype=np.float64) / M.shape[0], k))


def ratio_condition_value(ann: AnnulusParams, tau: float) -> float:
    tau = check_tau(tau)
    return ratio_expression_max(tau / (1.01 * ann.beta), tau / (0.99 * ann.alpha))


def check_ratio_condition(ann: AnnulusParams, tau: float) -> bool:
    """Whether the annulus/threshold pair satisfies the BIHT ratio condition (<= 0.49)."""
    return ratio_condition_value(ann, tau) <= RATIO_LIMIT
