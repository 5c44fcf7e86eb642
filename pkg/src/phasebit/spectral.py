"""Spectral initialization from phaseless bits.

Direction: leading eigenvector of ``S = (1/m) sum_i y_i a_i a_i^T`` (optionally
restricted to an estimated support). Norm: invert the +1-bit frequency,
whose expectation is ``2 Phi(-tau/||x||)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DimensionError, NormEstimateUndefined
from .sensing import check_tau, make_rng, matrix_of, standard_normal

DEFAULT_POWER_ITERS = 50

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Acklam's rational approximation to the normal quantile (|rel err| < 1.2e-9).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def phi(t):
    """Standard normal CDF."""
    out = ndtr(t)
    return float(out) if np.ndim(out) == 0 else out


def normal_pdf(t):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(t))


def _acklam_lower(p: float) -> float:
    # valid for p <= 0.5
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        return num / den
    q = p - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def phi_inv(p: float) -> float:
    """Normal quantile: rational initial guess refined by Newton steps on ``phi``."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"phi_inv needs 0 < p < 1, got {p}")
    if p > 0.5:
        return -phi_inv(1.0 - p)  # exact subtraction for p >= 0.5
    x = _acklam_lower(p)
    for _ in range(4):
        step = (float(ndtr(x)) - p) / float(normal_pdf(x))
        x -= step
        if abs(step) <= 1e-15 * max(1.0, abs(x)):
            break
    return x


def norm_from_frequency(plus_fraction: float, tau: float) -> float:
    """``-tau / phi_inv(plus_fraction / 2)``."""
    tau = check_tau(tau)
    if not 0.0 < plus_fraction < 1.0:
        raise NormEstimateUndefined(
            f"+1-bit frequency {plus_fraction} leaves the norm unidentifiable")
    return -tau / phi_inv(plus_fraction / 2.0)


def norm_estimate(y, tau: float) -> float:
    y = np.asarray(y)
    return norm_from_frequency(float(np.count_nonzero(y == 1)) / y.size, tau)


def population_coefficients(norm: float, tau: float) -> tuple[float, float]:
    """``(a, b)`` with ``E S = a x x^T + b I`` for ``||x|| = norm``.

    Closed forms of ``E[sign(norm |g| - tau)(g^2 - 1)] / norm^2`` and
    ``E[sign(norm |g| - tau)]``: with ``t = tau/norm``, ``a = 4 t pdf(t) / norm^2``
    and ``b = 4 Phi(-t) - 1``.
    """
    t = check_tau(tau) / norm
    return 4.0 * t * float(normal_pdf(t)) / norm**2, 4.0 * phi(-t) - 1.0


def population_matrix(x, tau: float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    a, b = population_coefficients(float(np.linalg.norm(x)), tau)
    return a * np.outer(x, x) + b * np.eye(x.size)


@dataclass(frozen=True, eq=False)
class SpectralEstimate:
    direction: np.ndarray
    norm_estimate: float
    support: np.ndarray | None = None

    @property
    def x_hat(self) -> np.ndarray:
        return self.norm_estimate * self.direction


def spectral_matrix(A, y) -> np.ndarray:
    M = matrix_of(A)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (M.shape[0],):
        raise DimensionError(f"{y.size} bits for m={M.shape[0]} rows")
    S = (M.T * y) @ M / M.shape[0]
    return 0.5 * (S + S.T)


def power_method(M, iters: int = DEFAULT_POWER_ITERS, seed: int = 0, start=None) -> np.ndarray:
    """Unit eigenvector for the algebraically largest eigenvalue of symmetric M.

    Iterates on ``M + mu I`` with ``mu`` the maximal absolute row sum, which
    makes the shifted matrix positive semidefinite.
    """
    if iters < 1:
        raise ValueError("power_method needs iters >= 1")
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    if M.shape != (n, n):
        raise DimensionError(f"power_method needs a square matrix, got {M.shape}")
    mu = float(np.abs(M).sum(axis=1).max())
    v = standard_normal(make_rng(seed), n) if start is None else np.array(start, dtype=np.float64)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = M @ v + mu * v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
    return v


def support_estimate(S, k: int) -> np.ndarray:
    """Sorted indices of the k largest diagonal entries (signed, ties to lower index)."""
    diag = np.diag(np.asarray(S))
    if not 1 <= k <= diag.size:
        raise ValueError(f"k={k} outside [1, {diag.size}]")
    return np.sort(np.argsort(-diag, kind="stable")[:k])


def estimate_from_matrix(S, plus_fraction: float, tau: float,
                         power_iters: int = DEFAULT_POWER_ITERS, seed: int = 0,
                         support=None) -> SpectralEstimate:
    """Shared back end of both initializers; also accepts population inputs."""
    S = np.asarray(S, dtype=np.float64)
    norm = norm_from_frequency(plus_fraction, tau)
    start = standard_normal(make_rng(seed), S.shape[0])
    if support is not None:
        mask = np.zeros(S.shape[0], dtype=bool)
        mask[support] = True
        S = np.where(np.outer(mask, mask), S, 0.0)
        start = np.where(mask, start, 0.0)
    v = power_method(S, power_iters, start=start)
    return SpectralEstimate(v, norm, None if support is None else np.asarray(support))


def _plus_fraction(y) -> float:
    y = np.asarray(y)
    return float(np.count_nonzero(y == 1)) / y.size


def si_1bpr(A, y, tau: float, power_iters: int = DEFAULT_POWER_ITERS, seed: int = 0) -> SpectralEstimate:
    S = spectral_matrix(A, y)
    return estimate_from_matrix(S, _plus_fraction(y), tau, power_iters, seed)


def si_1bspr(A, y, tau: float, k: int, power_iters: int = DEFAULT_POWER_ITERS,
             seed: int = 0) -> SpectralEstimate:
    S = spectral_matrix(A, y)
    support = support_estimate(S, k)
    return estimate_from_matrix(S, _plus_fraction(y), tau, power_iters, seed, support)
