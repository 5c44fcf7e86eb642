"""Monte-Carlo and closed-form oracles for the geometry of phaseless bits.

Everything here is a checking tool: separation probabilities of a random
phaseless hyperplane, the contraction function of one gradient step, a
brute-force Hamming decoder and a tessellation audit, the last two in 2-D only.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .metrics import AnnulusParams, dist
from .sensing import check_tau, make_rng, matrix_of, sign, standard_normal
from .spectral import phi

_CHUNK = 1 << 17
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# --------------------------------------------------------------------------
# separation probabilities

@dataclass(frozen=True)
class SeparationEstimate:
    p_hat: float
    samples: int
    half_width: float

    @classmethod
    def from_count(cls, hits: int, samples: int) -> "SeparationEstimate":
        p = hits / samples
        return cls(p, samples, 1.96 * math.sqrt(p * (1.0 - p) / samples))


def _projections(u, v, samples: int, seed: int):
    """Yield chunks of (a^T u, a^T v) for i.i.d. standard Gaussian a."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionError("u and v must be vectors of equal length")
    rng = make_rng(seed)
    P = np.stack([u, v], axis=1)
    done = 0
    while done < samples:
        c = min(_CHUNK, samples - done)
        Z = standard_normal(rng, (c, u.size)) @ P
        yield Z[:, 0], Z[:, 1]
        done += c


def _separated(zu, zv, tau):
    return sign(np.abs(zu) - tau) != sign(np.abs(zv) - tau)


def mc_separation(u, v, tau, samples: int, seed: int) -> SeparationEstimate:
    tau = check_tau(tau)
    hits = sum(int(np.count_nonzero(_separated(zu, zv, tau)))
               for zu, zv in _projections(u, v, samples, seed))
    return SeparationEstimate.from_count(hits, samples)


def mc_theta_well_separation(u, v, tau, theta: float, samples: int, seed: int) -> SeparationEstimate:
    """Separation with both ``||a^T u| - tau|`` and ``||a^T v| - tau|`` at least
    ``theta * dist(u, v)``. Same seed as :func:`mc_separation` means same samples."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    tau = check_tau(tau)
    margin = theta * dist(u, v)
    hits = 0
    for zu, zv in _projections(u, v, samples, seed):
        ok = (_separated(zu, zv, tau)
              & (np.abs(np.abs(zu) - tau) >= margin)
              & (np.abs(np.abs(zv) - tau) >= margin))
        hits += int(np.count_nonzero(ok))
    return SeparationEstimate.from_count(hits, samples)


def mc_double_separation(u, v, tau, samples: int, seed: int) -> SeparationEstimate:
    """Separated by the phaseless hyperplane and by the plane ``a^T z = 0``."""
    tau = check_tau(tau)
    hits = 0
    for zu, zv in _projections(u, v, samples, seed):
        ok = _separated(zu, zv, tau) & (sign(zu) != sign(zv))
        hits += int(np.count_nonzero(ok))
    return SeparationEstimate.from_count(hits, samples)


def double_separation_bound(u, v, tau) -> float:
    d = float(np.linalg.norm(np.asarray(u, float) - np.asarray(v, float)))
    if d == 0.0:
        return 0.0
    return 4.0 * math.exp(-check_tau(tau) ** 2 / (2.0 * d * d))


def parallel_separation_exact(norm_u: float, norm_v: float, tau: float) -> float:
    """Separation probability of two parallel signals: ``2|Phi(-tau/|u|) - Phi(-tau/|v|)|``."""
    if norm_u <= 0 or norm_v <= 0:
        raise ValueError("norms must be positive")
    tau = check_tau(tau)
    return 2.0 * abs(phi(-tau / norm_u) - phi(-tau / norm_v))


@dataclass(frozen=True)
class RatioAudit:
    dists: np.ndarray
    estimates: tuple[SeparationEstimate, ...]

    @property
    def ratios(self) -> np.ndarray:
        return np.array([e.p_hat for e in self.estimates]) / self.dists

    @property
    def spread(self) -> float:
        """``C / c`` for the tightest interval [c, C] holding every ratio."""
        r = self.ratios
        return float(r.max() / r.min()) if r.min() > 0 else math.inf


def random_annulus_pairs(ann: AnnulusParams, n: int, pairs: int, seed: int,
                         dist_range: tuple[float, float] = (0.05, 0.5)) -> list[tuple[np.ndarray, np.ndarray]]:
    """u uniform in direction with norm uniform on [alpha, beta]; v a perturbation of u
    (log-uniform size in ``dist_range``) with its norm clipped back into the annulus."""
    rng = make_rng(seed)
    out = []
    lo, hi = dist_range
    for _ in range(pairs):
        g = standard_normal(rng, n)
        u = g / np.linalg.norm(g) * (ann.alpha + (ann.beta - ann.alpha) * rng.random())
        z = standard_normal(rng, n)
        v = u + math.exp(math.log(lo) + (math.log(hi) - math.log(lo)) * rng.random()) * z / np.linalg.norm(z)
        nv = np.linalg.norm(v)
        v *= min(max(nv, ann.alpha), ann.beta) / nv
        out.append((u, v))
    return out


def separation_ratio_audit(ann: AnnulusParams, tau: float, n: int = 3, pairs: int = 200,
                           samples: int = 100_000, seed: int = 0) -> RatioAudit:
    """Monte-Carlo ``P_{u,v}`` against ``dist(u, v)`` over random annulus pairs."""
    pts = random_annulus_pairs(ann, n, pairs, seed)
    dists = np.array([dist(u, v) for u, v in pts])
    ests = tuple(mc_separation(u, v, tau, samples, seed + 1 + i) for i, (u, v) in enumerate(pts))
    return RatioAudit(dists, ests)


def write_separation_csv(path, rows) -> None:
    """rows: iterable of (pair_id, dist, SeparationEstimate)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pair_id", "dist", "p_hat", "half_width"])
        for pid, d, est in rows:
            w.writerow([pid, repr(float(d)), repr(est.p_hat), repr(est.half_width)])


# --------------------------------------------------------------------------
# contraction function

@dataclass(frozen=True)
class ContractionProfile:
    eta: float
    g: float
    h: float
    F: float


def contraction_profile(eta: float, a: float, b: float, tau: float) -> ContractionProfile:
    rho2 = a * a + b * b
    if rho2 <= 0:
        raise ValueError("contraction_profile needs a^2 + b^2 > 0")
    tau = check_tau(tau)
    pre = math.sqrt(2.0 / math.pi) * math.exp(-tau * tau / (2.0 * rho2)) / rho2**2.5
    g = pre * (tau * tau * a * a + b * b * rho2)
    h = pre * a * b * (rho2 - tau * tau)
    F = math.hypot(1.0 - eta * g, eta * h)
    return ContractionProfile(eta, g, h, F)


def contraction_F_grid(eta: float, a, b, tau: float) -> np.ndarray:
    """Vectorized ``F(eta, a, b)``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    rho2 = a * a + b * b
    pre = np.sqrt(2.0 / np.pi) * np.exp(-tau * tau / (2.0 * rho2)) / rho2**2.5
    g = pre * (tau * tau * a * a + b * b * rho2)
    h = pre * a * b * (rho2 - tau * tau)
    return np.hypot(1.0 - eta * g, eta * h)


def _cubic_term(w):
    return np.abs(1.0 - w**3 * np.exp((1.0 - w * w) / 2.0))


def _linear_term(w):
    return np.abs(1.0 - w * np.exp((1.0 - w * w) / 2.0))


def _golden_max(f, lo: float, hi: float, iters: int = 80) -> float:
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
    return max(f1, f2)


def _interval_max(f, lo: float, hi: float, points: int) -> float:
    if hi <= lo:
        return float(f(np.array([lo]))[0])
    w = np.linspace(lo, hi, points)
    vals = f(w)
    j = int(np.argmax(vals))
    a, b = w[max(j - 1, 0)], w[min(j + 1, points - 1)]
    return max(float(vals.max()), _golden_max(lambda t: float(f(np.array([t]))[0]), a, b))


def ratio_expression_max(w_lo: float, w_hi: float, points: int = 10_000) -> float:
    """max over w in [w_lo, w_hi] of both ``|1 - w^3 e^{(1-w^2)/2}|`` and
    ``|1 - w e^{(1-w^2)/2}|``: dense grid, then golden-section around the best node."""
    return max(_interval_max(_cubic_term, w_lo, w_hi, points),
               _interval_max(_linear_term, w_lo, w_hi, points))


def sup_F_closed_form(ann: AnnulusParams, tau: float) -> float:
    """sup of ``F(sqrt(pi e / 2) tau, a, b)`` over ``a^2 + b^2 in [alpha^2, beta^2]``."""
    tau = check_tau(tau)
    return ratio_expression_max(tau / ann.beta, tau / ann.alpha)


def sup_F_grid(ann: AnnulusParams, tau: float, radial: int = 400, angular: int = 400) -> float:
    """Brute-force supremum of F over a polar grid covering the full circle."""
    tau = check_tau(tau)
    eta = math.sqrt(math.pi * math.e / 2.0) * tau
    r = np.linspace(ann.alpha, ann.beta, radial)
    t = np.linspace(0.0, 2.0 * np.pi, angular, endpoint=False)
    R, T = np.meshgrid(r, t, indexing="ij")
    return float(contraction_F_grid(eta, R * np.cos(T), R * np.sin(T), tau).max())


# --------------------------------------------------------------------------
# adaptive Simpson (oracle for the population coefficients)

def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10, max_depth: int = 50) -> float:
    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(lo, hi, fa, fm, fb, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, lo, mid)
        right = simpson(fm, frm, fb, mid, hi)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * eps:
            return left + right + delta / 15.0
        return (recurse(lo, mid, fa, flm, fm, left, eps / 2.0, depth - 1)
                + recurse(mid, hi, fm, frm, fb, right, eps / 2.0, depth - 1))

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def population_coefficients_quad(norm: float, tau: float, tol: float = 1e-10) -> tuple[float, float]:
    """``(a, b)`` of ``E S = a x x^T + b I`` by adaptive Simpson on [-10, 10].

    The integrands jump at ``|g| = tau/norm``; integration is split there.
    """
    tau = check_tau(tau)
    t = tau / norm

    def weight(g):
        return (1.0 if norm * abs(g) >= tau else -1.0) * math.exp(-0.5 * g * g) / math.sqrt(2.0 * math.pi)

    cuts = [-10.0] + [c for c in (-t, t) if -10.0 < c < 10.0] + [10.0]
    a_int = b_int = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        # nudge off the jump so each piece sees a single branch
        eps = 1e-13 * max(1.0, abs(lo), abs(hi))
        lo_, hi_ = lo + eps, hi - eps
        a_int += adaptive_simpson(lambda g: weight(g) * (g * g - 1.0), lo_, hi_, tol)
        b_int += adaptive_simpson(weight, lo_, hi_, tol)
    return a_int / norm**2, b_int


# --------------------------------------------------------------------------
# 2-D brute force: Hamming decoder and tessellation audit

def polar_grid(ann: AnnulusParams, radial: int, angular: int) -> np.ndarray:
    """Points of the annulus, radial-major: index ``i * angular + j``."""
    r = np.linspace(ann.alpha, ann.beta, radial) if radial > 1 else np.array([ann.alpha])
    t = np.linspace(0.0, 2.0 * np.pi, angular, endpoint=False)
    return np.stack([np.repeat(r, angular) * np.tile(np.cos(t), radial),
                     np.repeat(r, angular) * np.tile(np.sin(t), radial)], axis=1)


def hdm_oracle_2d(A, y, tau, ann: AnnulusParams, grid_radial: int = 200,
                  grid_angular: int = 800) -> np.ndarray:
    """Grid point minimizing ``d_H(sign(|A u| - tau), y)`` over the annulus.

    Ties go to the smallest radial index, then smallest angular index.
    """
    M = matrix_of(A)
    if M.shape[1] != 2:
        raise DimensionError("hdm_oracle_2d is brute force and only supports n == 2")
    tau = check_tau(tau)
    y = np.asarray(y, dtype=np.int8)
    if y.shape != (M.shape[0],):
        raise DimensionError(f"{y.size} bits for m={M.shape[0]} rows")
    pts = polar_grid(ann, grid_radial, grid_angular)
    best, best_d = 0, M.shape[0] + 1
    step = max(1, (1 << 22) // max(M.shape[0], 1))
    for s in range(0, len(pts), step):
        chunk = pts[s:s + step]
        d = np.count_nonzero(sign(np.abs(chunk @ M.T) - tau) != y, axis=1)
        j = int(np.argmin(d))  # first minimum = lowest flat index
        if d[j] < best_d:
            best, best_d = s + j, int(d[j])
    return pts[best].copy()


def _pattern_hashes(M: np.ndarray, tau: float, ann: AnnulusParams,
                    radial: int, angular: int, seed: int) -> np.ndarray:
    """Two independent 64-bit linear hashes of every grid point's bit pattern.

    Along a ray at angle t the bit of row i flips exactly once, at radius
    ``tau / |a_i . e_t|``, so each ray is handled by one sort plus a cumulative
    sum of random weights (wrapping mod 2^64) instead of an m-length pattern.
    """
    r = np.linspace(ann.alpha, ann.beta, radial) if radial > 1 else np.array([ann.alpha])
    t = np.linspace(0.0, 2.0 * np.pi, angular, endpoint=False)
    m = M.shape[0]
    out = np.zeros((radial, angular, 2), dtype=np.uint64)
    if m == 0:
        return out.reshape(-1, 2)
    rng = make_rng(seed)
    weights = rng.integers(0, np.iinfo(np.uint64).max, size=(m, 2), dtype=np.uint64, endpoint=True)
    dirs = np.stack([np.cos(t), np.sin(t)], axis=1)
    proj = np.abs(dirs @ M.T)  # (angular, m)
    with np.errstate(divide="ignore"):
        radius = np.where(proj > 0, tau / proj, np.inf)
    for j in range(angular):
        order = np.argsort(radius[j], kind="stable")
        cw = np.zeros((m + 1, 2), dtype=np.uint64)
        np.cumsum(weights[order], axis=0, out=cw[1:])
        # bit i is +1 once r >= radius_i
        pos = np.searchsorted(radius[j][order], r, side="right")
        out[:, j, :] = cw[pos]
    return out.reshape(-1, 2)


def _cell_labels(M, tau, ann, radial, angular, seed):
    h = _pattern_hashes(M, tau, ann, radial, angular, seed)
    _, labels = np.unique(h, axis=0, return_inverse=True)
    return labels.reshape(radial, angular)


def _max_pair_dist(P: np.ndarray) -> float:
    """max over pairs of min(||p - q||, ||p + q||) (block-wise)."""
    best = 0.0
    sq = np.einsum("ij,ij->i", P, P)
    step = 2048
    for s in range(0, len(P), step):
        G = P[s:s + step] @ P.T
        d2 = sq[s:s + step, None] + sq[None, :] - 2.0 * np.abs(G)
        best = max(best, float(d2.max()))
    return math.sqrt(max(best, 0.0))


def tessellation_audit_2d(m: int, tau: float, ann: AnnulusParams, grid: tuple[int, int] = (400, 2000),
                          seed: int = 0) -> tuple[float, int]:
    """Max dist-diameter over cells and number of cells of the phaseless tessellation.

    Points sharing a bit pattern form a cell; since ``u`` and ``-u`` always
    share a pattern, every cell is sign-symmetric. The dist-diameter of a cell
    is attained on its boundary, so only grid points with a differently
    labelled neighbour (or on the annulus rims) enter the pairwise search.
    """
    tau = check_tau(tau)
    radial, angular = grid
    M = standard_normal(make_rng(seed), (m, 2)) if m > 0 else np.zeros((0, 2))
    labels = _cell_labels(M, tau, ann, radial, angular, seed ^ 0x9E3779B97F4A7C15)
    edge = np.zeros_like(labels, dtype=bool)
    edge[0, :] = edge[-1, :] = True
    diff_r = labels[1:, :] != labels[:-1, :]
    edge[1:, :] |= diff_r
    edge[:-1, :] |= diff_r
    diff_t = labels != np.roll(labels, 1, axis=1)
    edge |= diff_t
    edge |= np.roll(diff_t, -1, axis=1)
    pts = polar_grid(ann, radial, angular)
    flat_labels = labels.ravel()
    num_cells = int(flat_labels.max()) + 1
    sel = np.flatnonzero(edge.ravel())
    lab = flat_labels[sel]
    order = np.argsort(lab, kind="stable")
    sel, lab = sel[order], lab[order]
    bounds = np.flatnonzero(np.diff(lab)) + 1
    diameter = 0.0
    for group in np.split(sel, bounds):
        if group.size > 1:
            diameter = max(diameter, _max_pair_dist(pts[group]))
    return diameter, num_cells
