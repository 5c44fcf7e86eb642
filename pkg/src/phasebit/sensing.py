"""Gaussian sensing ensembles, the phaseless 1-bit quantizer and bit corruption.

Randomness comes from numpy's Philox4x64-10 counter-based generator keyed by
the user seed through ``SeedSequence``. Gaussian variates are produced by the
Box-Muller transform applied to Philox uniforms, so an ensemble depends only
on the seed and the generator algorithm, not on numpy's ziggurat tables.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError

MAGIC = b"PB1B"
_HEADER = struct.Struct("<4sIIQQ")
_U64 = 1 << 64


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < _U64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(check_seed(seed)))


def standard_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Box-Muller normals from the generator's uniform stream."""
    shape = (size,) if np.isscalar(size) else tuple(size)
    count = int(np.prod(shape, dtype=np.int64))
    pairs = (count + 1) // 2
    u = rng.random((pairs, 2))
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))  # 1 - U lies in (0, 1]
    theta = 2.0 * np.pi * u[:, 1]
    z = np.empty((pairs, 2))
    z[:, 0] = r * np.cos(theta)
    z[:, 1] = r * np.sin(theta)
    return z.ravel()[:count].reshape(shape)


@dataclass(frozen=True, eq=False)
class GaussianEnsemble:
    """An m x n matrix whose rows are the sensing vectors a_i."""

    rows: np.ndarray
    seed: int

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]


def gaussian_ensemble(m: int, n: int, seed: int) -> GaussianEnsemble:
    if m < 1 or n < 1:
        raise ValueError(f"ensemble needs m, n >= 1, got ({m}, {n})")
    rows = standard_normal(make_rng(seed), (m, n))
    rows.setflags(write=False)
    return GaussianEnsemble(rows, check_seed(seed))


def matrix_of(A) -> np.ndarray:
    """Accept a GaussianEnsemble or anything array-like with two axes."""
    M = A.rows if isinstance(A, GaussianEnsemble) else np.asarray(A, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionError(f"sensing matrix must be 2-D, got shape {M.shape}")
    return M


def check_tau(tau) -> float:
    tau = float(tau)
    if not tau > 0:
        raise ValueError(f"threshold must be positive, got {tau}")
    return tau


def sign(t) -> np.ndarray:
    """Elementwise sign with sign(0) = +1, as int8."""
    return np.where(np.asarray(t) >= 0, 1, -1).astype(np.int8)


def quantize(A, x, tau) -> np.ndarray:
    """Bits ``sign(|A x| - tau)``; a bit is +1 iff ``|a_i^T x| >= tau``."""
    M = matrix_of(A)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (M.shape[1],):
        raise DimensionError(f"signal length {x.shape} does not match n={M.shape[1]}")
    return sign(np.abs(M @ x) - check_tau(tau))


def quantize_linear(A, x) -> np.ndarray:
    """Bits ``sign(A x)`` of the classical (phase-preserving) 1-bit model."""
    M = matrix_of(A)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (M.shape[1],):
        raise DimensionError(f"signal length {x.shape} does not match n={M.shape[1]}")
    return sign(M @ x)


def corrupt(y, zeta: float, seed: int) -> np.ndarray:
    """Flip exactly ``floor(zeta * m)`` uniformly chosen bits.

    Random flips only; a worst-case adversary is not modelled.
    """
    if not 0.0 <= zeta <= 1.0:
        raise ValueError(f"zeta must lie in [0, 1], got {zeta}")
    y = np.asarray(y, dtype=np.int8)
    m = y.size
    flips = int(np.floor(zeta * m))
    out = y.copy()
    if flips:
        idx = make_rng(seed).choice(m, size=flips, replace=False)
        out[idx] = -out[idx]
    return out


def save_ensemble(path, ens: GaussianEnsemble, tau: float) -> None:
    """Write the PB1B dump: header then row-major little-endian float64 rows."""
    m, n = ens.rows.shape
    tau_bits = struct.unpack("<Q", struct.pack("<d", check_tau(tau)))[0]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, m, n, ens.seed, tau_bits))
        fh.write(np.ascontiguousarray(ens.rows, dtype="<f8").tobytes())


def load_ensemble(path) -> tuple[GaussianEnsemble, float]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("truncated PB1B header")
    magic, m, n, seed, tau_bits = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    body = data[_HEADER.size:]
    if len(body) != 8 * m * n:
        raise ValueError(f"expected {8 * m * n} payload bytes, found {len(body)}")
    rows = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(m, n)
    rows.setflags(write=False)
    tau = struct.unpack("<d", struct.pack("<Q", tau_bits))[0]
    return GaussianEnsemble(rows, seed), tau
