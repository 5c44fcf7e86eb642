"""1-bit phase retrieval from coded diffraction patterns.

Pattern l measures ``F D_l x`` where ``D_l`` is a diagonal mask with entries
drawn uniformly from {1, -1, j, -j} and ``F`` is the DFT with unit-modulus
entries, so every sensing vector ``a_i`` has unit-modulus entries and
``a_i^* x`` is approximately ``CN(0, ||x||^2)``, the same scale as a real
Gaussian row. Bits are stored pattern-major (index ``l * n + k``). Images are
vectorized row-major, one band at a time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, NormEstimateUndefined
from .sensing import check_tau, make_rng, standard_normal

DEFAULT_POWER_ITERS = 50
DEFAULT_GD_ITERS = 100
EDGE_ITERS = 10
_MASK_VALUES = np.array([1.0, -1.0, 1.0j, -1.0j])


def fft(v) -> np.ndarray:
    """Unitary DFT (scale 1/sqrt(n))."""
    v = np.asarray(v, dtype=np.complex128)
    if v.size == 0:
        raise ValueError("fft of an empty vector")
    return np.fft.fft(v, norm="ortho")


def ifft(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    if v.size == 0:
        raise ValueError("ifft of an empty vector")
    return np.fft.ifft(v, norm="ortho")


def csign(z) -> np.ndarray:
    """z/|z| with sign(0) = 1."""
    z = np.asarray(z, dtype=np.complex128)
    mag = np.abs(z)
    out = np.ones_like(z)
    nz = mag > 0
    out[nz] = z[nz] / mag[nz]
    return out


@dataclass(frozen=True, eq=False)
class CdpOperator:
    masks: np.ndarray  # (L, n) complex, unit modulus
    seed: int

    @property
    def L(self) -> int:
        return self.masks.shape[0]

    @property
    def n(self) -> int:
        return self.masks.shape[1]

    @property
    def m(self) -> int:
        return self.masks.size


def cdp_operator(n: int, L: int, seed: int) -> CdpOperator:
    if n < 1 or L < 1:
        raise ValueError("cdp_operator needs n, L >= 1")
    idx = make_rng(seed).integers(0, 4, size=(L, n))
    masks = _MASK_VALUES[idx]
    masks.setflags(write=False)
    return CdpOperator(masks, int(seed))


def _check_signal(op: CdpOperator, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (op.n,):
        raise DimensionError(f"signal length {x.shape} does not match n={op.n}")
    return x


def forward(op: CdpOperator, x) -> np.ndarray:
    """All measurements ``a_i^* x`` as an (L, n) array."""
    x = _check_signal(op, x)
    return np.fft.fft(op.masks * x, axis=1)


def adjoint(op: CdpOperator, Z) -> np.ndarray:
    """``sum_i z_i a_i`` for z given as an (L, n) array (adjoint of :func:`forward`)."""
    Z = np.asarray(Z, dtype=np.complex128).reshape(op.L, op.n)
    return (np.conj(op.masks) * np.fft.ifft(Z, axis=1)).sum(axis=0) * op.n


def cdp_quantize(op: CdpOperator, x, tau) -> np.ndarray:
    mag = np.abs(forward(op, x)).ravel()
    return np.where(mag - check_tau(tau) >= 0, 1, -1).astype(np.int8)


def _check_bits(op, y):
    y = np.asarray(y, dtype=np.int8)
    if y.shape != (op.m,):
        raise DimensionError(f"{y.size} bits for m={op.m} measurements")
    return y


def wirtinger_subgradient(op: CdpOperator, tau, y, u) -> np.ndarray:
    """(1/4nL) sum_i (sign(|a_i^* u| - tau) - y_i) sign(a_i^* u) a_i, via FFTs."""
    tau = check_tau(tau)
    y = _check_bits(op, y).reshape(op.L, op.n)
    z = forward(op, u)
    pred = np.where(np.abs(z) - tau >= 0, 1, -1)
    coef = (pred - y) * csign(z)
    return adjoint(op, coef) / (4.0 * op.m)


def relative_error(x_hat, x) -> float:
    """min over global phase of ``||e^{j phi} x_hat - x|| / ||x||``."""
    x_hat = np.asarray(x_hat, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    return float(np.linalg.norm(align_phase(x_hat, x) - x) / np.linalg.norm(x))


def align_phase(x_hat, x) -> np.ndarray:
    """Rotate x_hat by ``exp(j arg <x_hat, x>)``, the optimal global phase."""
    x_hat = np.asarray(x_hat, dtype=np.complex128)
    ip = np.vdot(x_hat, x)
    return x_hat * (ip / abs(ip) if abs(ip) > 0 else 1.0)


def complex_norm_estimate(y, tau: float) -> float:
    """Norm from the +1-bit frequency ``exp(-tau^2/||x||^2)`` of a CN(0, ||x||^2) model."""
    y = np.asarray(y)
    frac = float(np.count_nonzero(y == 1)) / y.size
    if not 0.0 < frac < 1.0:
        raise NormEstimateUndefined(f"+1-bit frequency {frac} leaves the norm unidentifiable")
    return check_tau(tau) / math.sqrt(-math.log(frac))


def _minus_frame(op: CdpOperator, y):
    """``v -> Q v`` with ``Q = (1/m) sum_{y_i = -1} a_i a_i^*``."""
    minus = (y == -1).reshape(op.L, op.n)
    return lambda v: adjoint(op, minus * forward(op, v)) / op.m


def _unit_start(n: int, seed: int) -> np.ndarray:
    g = standard_normal(make_rng(seed), (2, n))
    v = g[0] + 1j * g[1]
    return v / np.linalg.norm(v)


def cdp_spectral_init(op: CdpOperator, y, tau, power_iters: int = DEFAULT_POWER_ITERS,
                      seed: int = 0, edge_iters: int = EDGE_ITERS) -> np.ndarray:
    """Leading eigenvector of ``S = (1/m) sum y_i a_i a_i^*`` scaled by the norm estimate.

    The masks make ``(1/m) sum_i a_i a_i^* = I``, so ``S = I - 2Q`` and the
    target is the bottom eigenvector of the PSD matrix ``Q`` of -1 bits. Power
    iteration runs on ``c I - Q`` where ``c`` is the Rayleigh quotient after
    ``edge_iters`` power steps on ``Q`` (an estimate of its top eigenvalue).
    The safe shift ``c = 1`` puts the bulk of ``Q`` near the top of the
    spectrum of ``I - Q`` and converges far more slowly.
    """
    if power_iters < 1:
        raise ValueError("power_iters must be >= 1")
    y = _check_bits(op, y)
    norm = complex_norm_estimate(y, tau)
    Q = _minus_frame(op, y)
    w = _unit_start(op.n, seed ^ 0x5851F42D4C957F2D)
    c = 1.0
    if edge_iters > 0:
        for _ in range(edge_iters):
            w = Q(w)
            nw = np.linalg.norm(w)
            if nw == 0.0:
                break
            w /= nw
        else:
            c = float(np.vdot(w, Q(w)).real)
    v = _unit_start(op.n, seed)
    for _ in range(power_iters):
        w = c * v - Q(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
    return norm * v


@dataclass
class CdpRecovery:
    estimate: np.ndarray
    init: np.ndarray
    rel_error: float | None = None
    init_rel_error: float | None = None


def cdp_eta(tau: float) -> float:
    return math.sqrt(2.0 * math.pi * math.e) * check_tau(tau)


def cdp_recover(op: CdpOperator, y, tau, power_iters: int = DEFAULT_POWER_ITERS,
                gd_iters: int = DEFAULT_GD_ITERS, truth=None, seed: int = 0,
                init=None) -> CdpRecovery:
    """Spectral initialization then Wirtinger-flow steps with ``eta = sqrt(2 pi e) tau``."""
    tau = check_tau(tau)
    y = _check_bits(op, y)
    x0 = (cdp_spectral_init(op, y, tau, power_iters, seed) if init is None
          else _check_signal(op, init).copy())
    eta = cdp_eta(tau)
    x = x0
    for _ in range(gd_iters):
        x = x - eta * wirtinger_subgradient(op, tau, y, x)
    out = CdpRecovery(x, x0)
    if truth is not None:
        out.rel_error = relative_error(x, truth)
        out.init_rel_error = relative_error(x0, truth)
    return out


# --------------------------------------------------------------------------
# images

def read_pnm(path) -> np.ndarray:
    """Binary 8-bit PGM (P5) or PPM (P6), scaled to [0, 1]: (H, W) or (H, W, 3)."""
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace before the raster
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"unsupported PNM type {magic!r}")
    if maxval != 255:
        raise ValueError("only 8-bit PNM files are supported")
    bands = 1 if magic == b"P5" else 3
    raw = np.frombuffer(data, dtype=np.uint8, count=w * h * bands, offset=pos)
    img = raw.astype(np.float64) / 255.0
    return img.reshape(h, w) if bands == 1 else img.reshape(h, w, 3)


def write_pnm(path, img) -> None:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        magic, (h, w) = b"P5", img.shape
    elif img.ndim == 3 and img.shape[2] == 3:
        magic, (h, w) = b"P6", img.shape[:2]
    else:
        raise DimensionError(f"expected (H, W) or (H, W, 3), got {img.shape}")
    raster = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(raster.tobytes())


def psnr(estimate, reference) -> float:
    """PSNR in dB for [0, 1]-scaled images, i.e. ``20 log10(255 / RMSE_255)``."""
    diff = np.asarray(estimate, float) - np.asarray(reference, float)
    rms = float(np.sqrt(np.mean(diff * diff)))
    return math.inf if rms == 0 else -20.0 * math.log10(rms)


def synthetic_image(size: int = 64, seed: int = 0) -> np.ndarray:
    """A smooth grayscale test image in [0, 1]: Gaussian blobs over a ramp."""
    rng = make_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / max(size - 1, 1)
    img = 0.2 + 0.3 * xx * yy
    for _ in range(6):
        cx, cy, s, amp = rng.random(4)
        img += (0.2 + 0.5 * amp) * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * (0.05 + 0.15 * s) ** 2))
    return np.clip(img / img.max(), 0.0, 1.0)


@dataclass
class BandReport:
    band: int
    tau: float
    rel_error: float
    psnr: float


def recover_image(img, L: int, seed: int, power_iters: int = DEFAULT_POWER_ITERS,
                  gd_iters: int = DEFAULT_GD_ITERS) -> tuple[np.ndarray, list[BandReport]]:
    """Sense and recover each band separately; tau is a third of the summed band norms."""
    img = np.asarray(img, dtype=np.float64)
    bands = img[..., None] if img.ndim == 2 else img
    h, w, nb = bands.shape
    vecs = [bands[:, :, b].ravel() for b in range(nb)]
    tau = sum(float(np.linalg.norm(v)) for v in vecs) / 3.0
    out = np.empty_like(bands)
    reports = []
    for b, x in enumerate(vecs):
        op = cdp_operator(h * w, L, seed + b)
        y = cdp_quantize(op, x, tau)
        rec = cdp_recover(op, y, tau, power_iters, gd_iters, truth=x, seed=seed + b)
        band = np.clip(align_phase(rec.estimate, x).real, 0.0, 1.0).reshape(h, w)
        out[:, :, b] = band
        reports.append(BandReport(b, tau, rec.rel_error, psnr(band, bands[:, :, b])))
    return (out[:, :, 0] if img.ndim == 2 else out), reports
