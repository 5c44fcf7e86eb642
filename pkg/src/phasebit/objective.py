"""One-sided l1 loss for phaseless bits and its subgradient.

The m-term sums are reduced with numpy's pairwise summation (reductions run
along a contiguous axis), which keeps them within ~1e-12 of a sequential sum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .sensing import check_tau, matrix_of, quantize, sign


@dataclass(frozen=True, eq=False)
class LossContext:
    """The data ``(A, tau, y)`` defining the loss."""

    A: np.ndarray
    tau: float
    y: np.ndarray

    def __post_init__(self):
        M = matrix_of(self.A)
        y = np.asarray(self.y, dtype=np.int8)
        if y.shape != (M.shape[0],):
            raise DimensionError(f"{y.size} bits for m={M.shape[0]} rows")
        if not np.all(np.abs(y) == 1):
            raise ValueError("bits must be +1/-1")
        object.__setattr__(self, "A", M)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "tau", check_tau(self.tau))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


def _check_u(ctx: LossContext, u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (ctx.n,):
        raise DimensionError(f"signal length {u.shape} does not match n={ctx.n}")
    return u


def _signed_row_sum(A: np.ndarray, idx: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """sum_i signs_i * A[i] over idx, pairwise-reduced."""
    if idx.size == 0:
        return np.zeros(A.shape[1])
    terms = np.ascontiguousarray((A[idx] * signs[:, None]).T)
    return terms.sum(axis=1)


def loss(ctx: LossContext, u) -> float:
    u = _check_u(ctx, u)
    margin = np.abs(ctx.A @ u) - ctx.tau
    return float(np.maximum(0.0, -ctx.y * margin).sum() / ctx.m)


def subgradient(ctx: LossContext, u) -> np.ndarray:
    """(1/2m) sum_i (sign(|a_i^T u| - tau) - y_i) sign(a_i^T u) a_i.

    Only rows whose predicted bit disagrees with y contribute, each with
    weight +-1/m.
    """
    u = _check_u(ctx, u)
    z = ctx.A @ u
    pred = sign(np.abs(z) - ctx.tau)
    idx = np.flatnonzero(pred != ctx.y)
    s = (pred[idx] * sign(z[idx])).astype(np.float64)
    return _signed_row_sum(ctx.A, idx, s) / ctx.m


def h_two_point(A, tau, u, v) -> np.ndarray:
    """The subgradient at u when the bits are those of v."""
    return subgradient(LossContext(A, tau, quantize(A, v, tau)), u)


def index_sets(A, tau, u, v) -> tuple[np.ndarray, np.ndarray]:
    """(R, L): rows separating u, v by the phaseless hyperplane and by the
    hyperplane through the origin, respectively."""
    M = matrix_of(A)
    tau = check_tau(tau)
    zu = M @ np.asarray(u, dtype=np.float64)
    zv = M @ np.asarray(v, dtype=np.float64)
    R = np.flatnonzero(sign(np.abs(zu) - tau) != sign(np.abs(zv) - tau))
    L = np.flatnonzero(sign(zu) != sign(zv))
    return R, L


def h_split(A, tau, p, q) -> tuple[np.ndarray, np.ndarray]:
    """Main and higher-order parts ``(h1, h2)`` of ``h(p, q)``.

    ``h1 = (1/m) sum_{R} sign(a^T(p-q)) a`` and
    ``h2 = (1/m) sum_{R & L} [sign(a^T(p+q)) - sign(a^T(p-q))] a``; away from
    measure-zero ties ``h1 + h2 == h_two_point(A, tau, p, q)``.
    """
    M = matrix_of(A)
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    m = M.shape[0]
    R, L = index_sets(M, tau, p, q)
    RL = np.intersect1d(R, L, assume_unique=True)
    zm = M @ (p - q)
    zp = M @ (p + q)
    h1 = _signed_row_sum(M, R, sign(zm[R]).astype(np.float64)) / m
    c2 = (sign(zp[RL]) - sign(zm[RL])).astype(np.float64)
    h2 = _signed_row_sum(M, RL, c2) / m
    return h1, h2
