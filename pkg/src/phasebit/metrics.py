"""Phaseless distances and the two-point coordinate frame.

Signals are plain 1-D float64 numpy arrays. Every metric here is invariant
under the global sign flip ``x -> -x``, which is the only ambiguity left by
magnitude-only measurements.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

_TINY_NORM = 1e-12
_RADICAND_SLACK = 1e-12


@dataclass(frozen=True)
class AnnulusParams:
    """The signal set ``{x : alpha <= ||x|| <= beta}``."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta >= self.alpha):
            raise ValueError(f"need 0 < alpha <= beta, got ({self.alpha}, {self.beta})")

    def contains(self, x, slack: float = 1e-12) -> bool:
        r = float(np.linalg.norm(x))
        return self.alpha - slack <= r <= self.beta + slack


@dataclass(frozen=True)
class PairCoordinates:
    u1: float
    v1: float
    u2: float


def as_signal(x, name: str = "signal") -> np.ndarray:
    """Validate and convert to a finite 1-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _pair(u, v):
    u = as_signal(u, "u")
    v = as_signal(v, "v")
    if u.shape != v.shape:
        raise DimensionError(f"length mismatch: {u.size} vs {v.size}")
    return u, v


def dist(u, v) -> float:
    """min(||u - v||, ||u + v||)."""
    u, v = _pair(u, v)
    return float(min(np.linalg.norm(u - v), np.linalg.norm(u + v)))


def dist_d(u, v) -> float:
    """Directional error: ``dist`` between the normalized signals."""
    u, v = _pair(u, v)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu < _TINY_NORM or nv < _TINY_NORM:
        raise ValueError("dist_d is undefined for (near) zero-norm input")
    return dist(u / nu, v / nv)


def dist_n(u, v) -> float:
    """Error in norm ``| ||u|| - ||v|| |``."""
    u, v = _pair(u, v)
    return float(abs(np.linalg.norm(u) - np.linalg.norm(v)))


def hamming(y1, y2) -> int:
    a = np.asarray(y1)
    b = np.asarray(y2)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def rank1_frob_dist(u, v) -> float:
    """Frobenius distance ``||uu^T - vv^T||_F`` without forming the matrices."""
    u, v = _pair(u, v)
    nu2 = float(u @ u)
    nv2 = float(v @ v)
    uv = float(u @ v)
    return float(np.sqrt(max(nu2 * nu2 + nv2 * nv2 - 2.0 * uv * uv, 0.0)))


def _radicand(u, v) -> float:
    val = float(u @ u) * float(v @ v) - float(u @ v) ** 2
    if val < 0:
        if val < -_RADICAND_SLACK:
            raise ArithmeticError(f"negative Gram determinant {val:g}")
        val = 0.0
    return val


def parameterize_pair(u, v) -> PairCoordinates:
    """Coordinates ``(u1, v1, u2)`` with ``u = u1 b1 + u2 b2`` and ``v = v1 b1 + u2 b2``.

    ``b1 = (u - v)/||u - v||``; see :func:`pair_frame` for ``b2``.
    """
    u, v = _pair(u, v)
    d = u - v
    nd = float(np.linalg.norm(d))
    if nd == 0.0:
        raise ValueError("parameterize_pair needs u != v")
    u1 = float(u @ d) / nd
    v1 = float(v @ d) / nd
    u2 = np.sqrt(_radicand(u, v)) / nd
    return PairCoordinates(u1, v1, float(u2))


def pair_frame(u, v) -> tuple[np.ndarray, np.ndarray | None]:
    """Orthonormal ``(b1, b2)`` spanning the plane of u and v.

    For non-parallel pairs ``b2`` is the normalized
    ``<v, v - u> u + <u, u - v> v``. For parallel pairs any unit vector
    orthogonal to ``b1`` works; we take one Gram-Schmidt step on the first
    canonical basis vector ``e_j`` with ``b1_j^2 <= 1/2``. ``b2`` is ``None``
    when n == 1.
    """
    u, v = _pair(u, v)
    d = u - v
    nd = float(np.linalg.norm(d))
    if nd == 0.0:
        raise ValueError("pair_frame needs u != v")
    b1 = d / nd
    w = float(v @ (v - u)) * u + float(u @ (u - v)) * v
    nw = float(np.linalg.norm(w))
    # ||w||^2 = ||u - v||^2 * Gram determinant; compare on that scale
    if nw > 1e-9 * nd * max(float(u @ u), float(v @ v), 1.0):
        return b1, w / nw
    if u.size == 1:
        return b1, None
    j = int(np.flatnonzero(b1 * b1 <= 0.5)[0])
    e = np.zeros_like(b1)
    e[j] = 1.0
    r = e - b1[j] * b1
    return b1, r / np.linalg.norm(r)
