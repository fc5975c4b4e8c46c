"""Low-resolution scalar quantization and its Bussgang linearization.

The b-bit uniform quantizer is designed for a zero-mean Gaussian input by a
one-dimensional numeric minimization of the quantization MSE; the achieved
normalized MSE is the distortion factor rho_q, which equals one minus the
Bussgang gain for an MSE-optimal quantizer.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from .channel import ChannelTaps
from .errors import ConfigurationError, UnsupportedResolutionError

MAX_BITS = 16


@dataclass(frozen=True)
class QuantizerSpec:
    """Scalar quantizer: thresholds a_0..a_{2^b} (outer ones infinite) and levels."""

    bits: int
    thresholds: np.ndarray
    levels: np.ndarray
    rho_q: float
    input_std: float


@dataclass(frozen=True)
class BussgangModel:
    """Effective linear model of the quantized receiver for one time slot.

    gain is the scalar Bussgang gain (1 - rho_q); eff_noise_diag holds the
    per-antenna diagonal of the effective-noise covariance, identical for
    every time slot within a block.
    """

    gain: float
    eff_noise_diag: np.ndarray
    rho_q: float
    sigma_eta2: float


def _gaussian_partial_moments(lo, hi, sigma):
    """P, E[y 1], E[y^2 1] of N(0, sigma^2) over the interval (lo, hi]."""
    a = lo / sigma
    b = hi / sigma
    P = norm.cdf(b) - norm.cdf(a)
    pa = norm.pdf(a) if np.isfinite(a) else 0.0
    pb = norm.pdf(b) if np.isfinite(b) else 0.0
    m1 = sigma * (pa - pb)
    apa = a * pa if np.isfinite(a) else 0.0
    bpb = b * pb if np.isfinite(b) else 0.0
    m2 = sigma**2 * (P + apa - bpb)
    return P, m1, m2


def gaussian_quant_mse(thresholds: np.ndarray, levels: np.ndarray, sigma: float) -> float:
    """Exact quantization MSE for a zero-mean Gaussian input of std sigma."""
    mse = 0.0
    for j, q in enumerate(levels):
        P, m1, m2 = _gaussian_partial_moments(thresholds[j], thresholds[j + 1], sigma)
        mse += q * q * P - 2.0 * q * m1 + m2
    return mse


def _uniform_grid(bits: int, delta: float) -> tuple[np.ndarray, np.ndarray]:
    n = 2**bits
    half = n // 2
    interior = (np.arange(1, n) - half) * delta
    thresholds = np.concatenate(([-np.inf], interior, [np.inf]))
    levels = (np.arange(1, n + 1) - half - 0.5) * delta
    return thresholds, levels


def design_quantizer(b: int, sigma: float, uniform: bool = True) -> QuantizerSpec:
    """MSE-optimal b-bit quantizer for a zero-mean Gaussian of std sigma.

    The default is the optimum-uniform design (equal step, levels at interval
    centers, step found by bounded scalar minimization of the closed-form
    Gaussian MSE).  uniform=False switches to the non-uniform Lloyd-Max design
    for comparison.
    """
    if b < 1:
        raise ConfigurationError("bit depth must be >= 1")
    if b > MAX_BITS:
        raise UnsupportedResolutionError(f"bit depth {b} > {MAX_BITS} unsupported")
    if not (sigma > 0 and np.isfinite(sigma)):
        raise ConfigurationError("sigma must be finite and positive")
    thresholds, levels, rho = _design_unit(b, uniform)
    return QuantizerSpec(
        bits=b,
        thresholds=thresholds * sigma,
        levels=levels * sigma,
        rho_q=float(rho),
        input_std=sigma,
    )


@lru_cache(maxsize=None)
def _design_unit(b: int, uniform: bool):
    """Design for unit std (cached); all other inputs are exact rescalings."""
    if not uniform:
        return _lloyd_max_unit(b)
    res = minimize_scalar(
        lambda d: gaussian_quant_mse(*_uniform_grid(b, d), 1.0),
        bounds=(1e-8, 32.0 / 2**b),
        method="bounded",
        options={"xatol": 1e-12},
    )
    thresholds, levels = _uniform_grid(b, float(res.x))
    rho = gaussian_quant_mse(thresholds, levels, 1.0)
    return thresholds, levels, rho


def _lloyd_max_unit(b: int, max_iter: int = 500, tol: float = 1e-13):
    """Lloyd-Max design for N(0,1): alternate centroid and midpoint conditions."""
    n = 2**b
    _, levels = _uniform_grid(b, 1.0)
    levels = levels.copy()
    for _ in range(max_iter):
        mids = 0.5 * (levels[:-1] + levels[1:])
        thresholds = np.concatenate(([-np.inf], mids, [np.inf]))
        new = np.empty(n)
        for j in range(n):
            P, m1, _ = _gaussian_partial_moments(thresholds[j], thresholds[j + 1], 1.0)
            new[j] = m1 / P if P > 0 else levels[j]
        if np.max(np.abs(new - levels)) < tol:
            levels = new
            break
        levels = new
    mids = 0.5 * (levels[:-1] + levels[1:])
    thresholds = np.concatenate(([-np.inf], mids, [np.inf]))
    rho = gaussian_quant_mse(thresholds, levels, 1.0)
    return thresholds, levels, rho


def _quantize_real(v: np.ndarray, spec: QuantizerSpec) -> np.ndarray:
    idx = np.searchsorted(spec.thresholds[1:-1], v, side="left")
    return spec.levels[idx]


def quantize(y: np.ndarray, specs: list[QuantizerSpec] | QuantizerSpec) -> np.ndarray:
    """Quantize real and imaginary parts element-wise, one spec per receive antenna.

    y is an M-vector or an M x T stream; a single spec is broadcast over antennas.
    """
    y = np.asarray(y, dtype=np.complex128)
    squeeze = y.ndim == 1
    if squeeze:
        y = y[:, None]
    M = y.shape[0]
    if isinstance(specs, QuantizerSpec):
        specs = [specs] * M
    if len(specs) != M:
        raise ConfigurationError(f"need one QuantizerSpec per antenna ({M})")
    out = np.empty_like(y)
    for m, spec in enumerate(specs):
        out[m] = _quantize_real(y[m].real, spec) + 1j * _quantize_real(y[m].imag, spec)
    return out[:, 0] if squeeze else out


def distortion_factor(b: int) -> float:
    """Closed-form stand-in rho_q ~= 3^-b (complexity studies only)."""
    if b < 1:
        raise ConfigurationError("bit depth must be >= 1")
    return 3.0 ** (-b)


def bussgang_model(
    taps: ChannelTaps, rho_q: float, sigma_eta2: float, sigma_x2: float = 1.0
) -> BussgangModel:
    """Effective-noise statistics of the linearized quantized receiver.

    Per-antenna diagonal: (1-rho_q) * (sigma_eta^2 + rho_q * sigma_x^2 * c_m)
    with c_m the m-th diagonal entry of sum_l H_l H_l^H.  sigma_x2 scales the
    signal part of the receive variance; the quantizer is assumed matched to
    each antenna's input variance.
    """
    if not (0.0 <= rho_q < 1.0):
        raise ConfigurationError("rho_q must lie in [0, 1)")
    if not (sigma_eta2 > 0):
        raise ConfigurationError("sigma_eta2 must be positive")
    c = taps.tap_gram_diag()
    gain = 1.0 - rho_q
    diag = gain * (sigma_eta2 + rho_q * sigma_x2 * c)
    return BussgangModel(gain=gain, eff_noise_diag=diag, rho_q=rho_q, sigma_eta2=sigma_eta2)


def per_antenna_agc(taps: ChannelTaps, sigma_x2: float, sigma_eta2: float) -> np.ndarray:
    """Receive std per real dimension for each antenna, from known CSI.

    Antenna m sees variance sigma_x^2 * c_m + sigma_eta^2 split evenly over the
    real and imaginary parts.
    """
    c = taps.tap_gram_diag()
    return np.sqrt((sigma_x2 * c + sigma_eta2) / 2.0)
