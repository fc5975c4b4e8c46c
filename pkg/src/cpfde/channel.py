"""Frequency-selective block-fading MIMO channels and their stacked matrix forms.

The channel between K single-antenna users and M receive antennas is a set of
L+1 tap matrices H_l (M x K).  This module synthesizes random realizations from
a power-delay profile and materializes the block-Toeplitz, block-circulant and
per-subband frequency-domain representations used by the equalizer.

Dense matrices (block-Toeplitz / block-circulant) are validation aids for small
instances only; the streaming path never forms them.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionError

# 3GPP Extended Vehicular A tapped-delay-line definition.
EVA_DELAYS_NS = (0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0)
EVA_POWERS_DB = (0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9)


@dataclass(frozen=True)
class PowerDelayProfile:
    """Sparse power-delay profile: (tap index, linear power) pairs over L+1 taps."""

    entries: tuple[tuple[int, float], ...]
    total_taps: int

    def __post_init__(self):
        if self.total_taps < 1:
            raise ConfigurationError("total_taps must be >= 1")
        if not self.entries:
            raise ConfigurationError("power-delay profile needs at least one entry")
        prev = -1
        for idx, power in self.entries:
            if idx <= prev:
                raise ConfigurationError("tap indices must be strictly increasing")
            if idx >= self.total_taps:
                raise ConfigurationError(
                    f"tap index {idx} >= total_taps {self.total_taps}"
                )
            if not (power > 0 and np.isfinite(power)):
                raise ConfigurationError("tap powers must be finite and positive")
            prev = idx

    @property
    def memory(self) -> int:
        """Channel memory L (total taps minus one)."""
        return self.total_taps - 1

    @classmethod
    def flat(cls) -> "PowerDelayProfile":
        """Memoryless single-tap profile."""
        return cls(entries=((0, 1.0),), total_taps=1)

    @classmethod
    def uniform(cls, total_taps: int) -> "PowerDelayProfile":
        """Equal power on every tap."""
        return cls(
            entries=tuple((i, 1.0) for i in range(total_taps)),
            total_taps=total_taps,
        )

    @classmethod
    def eva(cls, total_taps: int = 128, sample_period_ns: float | None = None) -> "PowerDelayProfile":
        """Extended Vehicular A profile (9 nonzero taps) on an integer tap grid.

        The default sample period places the last EVA tap at index total_taps-1.
        Taps that collide on the grid have their linear powers merged.
        """
        if total_taps < 2:
            raise ConfigurationError("EVA profile needs total_taps >= 2")
        if sample_period_ns is None:
            sample_period_ns = EVA_DELAYS_NS[-1] / (total_taps - 1)
        merged: dict[int, float] = {}
        for delay, power_db in zip(EVA_DELAYS_NS, EVA_POWERS_DB):
            idx = int(round(delay / sample_period_ns))
            if idx >= total_taps:
                raise ConfigurationError(
                    f"EVA delay {delay} ns maps to tap {idx} >= total_taps {total_taps}"
                )
            merged[idx] = merged.get(idx, 0.0) + 10.0 ** (power_db / 10.0)
        entries = tuple(sorted(merged.items()))
        return cls(entries=entries, total_taps=total_taps)


@dataclass(frozen=True)
class ChannelTaps:
    """Ordered per-tap channel matrices, shape (L+1, M, K)."""

    taps: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.taps, dtype=np.complex128)
        if t.ndim != 3 or t.shape[0] < 1 or t.shape[1] < 1 or t.shape[2] < 1:
            raise DimensionError("taps must have shape (L+1, M, K) with L>=0, M,K>=1")
        object.__setattr__(self, "taps", t)

    @property
    def memory(self) -> int:
        return self.taps.shape[0] - 1

    @property
    def n_rx(self) -> int:
        return self.taps.shape[1]

    @property
    def n_users(self) -> int:
        return self.taps.shape[2]

    def tap_gram_diag(self) -> np.ndarray:
        """Per-antenna diagonal of sum_l H_l H_l^H, length M."""
        return np.sum(np.abs(self.taps) ** 2, axis=(0, 2)).real

    def energy(self) -> float:
        """Total tap energy sum_l ||H_l||_F^2."""
        return float(np.sum(np.abs(self.taps) ** 2))

    def scaled(self, factor: float) -> "ChannelTaps":
        return ChannelTaps(self.taps * factor)


@dataclass(frozen=True)
class BlockStackedChannel:
    """Dense stacked channel matrix with its structural kind recorded."""

    matrix: np.ndarray
    kind: str  # toeplitz | circulant | causal-part | interference-part
    block_len: int


@dataclass(frozen=True)
class FreqChannel:
    """Per-subband channel matrices, shape (N_b, M, K)."""

    subbands: np.ndarray
    includes_bussgang_gain: bool = False

    @property
    def block_len(self) -> int:
        return self.subbands.shape[0]


def generate_channel(
    pdp: PowerDelayProfile, M: int, K: int, rng: np.random.Generator
) -> ChannelTaps:
    """Draw a random channel realization from a power-delay profile.

    Nonzero taps are i.i.d. circularly-symmetric complex Gaussian; per-tap
    variances are the profile powers normalized so each scalar link has unit
    total energy: sum_l E|h_mk[l]|^2 = 1.
    """
    if M < 1 or K < 1:
        raise ConfigurationError("M and K must be >= 1")
    taps = np.zeros((pdp.total_taps, M, K), dtype=np.complex128)
    total_power = sum(p for _, p in pdp.entries)
    for idx, power in pdp.entries:
        var = power / total_power
        taps[idx] = np.sqrt(var / 2.0) * (
            rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))
        )
    return ChannelTaps(taps)


def build_block_toeplitz(taps: ChannelTaps, N_b: int) -> BlockStackedChannel:
    """Stack the linear convolution into the M*N_b x K*(N_b+L) block-Toeplitz matrix.

    Block-row i (time n-i, newest first) carries H_0..H_L starting at
    column-block i, so the matrix maps vec{X[n]} to vec{Y[n]} exactly.
    """
    L, M, K = taps.memory, taps.n_rx, taps.n_users
    if N_b <= L:
        raise DimensionError(f"N_b={N_b} must exceed channel memory L={L}")
    H = np.zeros((M * N_b, K * (N_b + L)), dtype=np.complex128)
    for i in range(N_b):
        for l in range(L + 1):
            j = i + l
            H[i * M : (i + 1) * M, j * K : (j + 1) * K] = taps.taps[l]
    return BlockStackedChannel(matrix=H, kind="toeplitz", block_len=N_b)


def build_block_circulant(
    taps: ChannelTaps, N_b: int, rho_q: float = 0.0
) -> tuple[BlockStackedChannel, BlockStackedChannel, BlockStackedChannel]:
    """Build the block-circulant approximation and its causal/interference split.

    Returns (circulant, causal, interference).  Both parts carry the Bussgang
    gain (1 - rho_q); the interference part holds the wrap-around blocks
    H_L..H_1 in the bottom-left corner and the circulant is their exact sum.
    """
    L, M, K = taps.memory, taps.n_rx, taps.n_users
    if N_b <= L:
        raise DimensionError(f"N_b={N_b} must exceed channel memory L={L}")
    if not (0.0 <= rho_q < 1.0):
        raise ConfigurationError("rho_q must lie in [0, 1)")
    gain = 1.0 - rho_q
    causal = np.zeros((M * N_b, K * N_b), dtype=np.complex128)
    interf = np.zeros_like(causal)
    for i in range(N_b):
        for l in range(L + 1):
            block = gain * taps.taps[l]
            if i + l < N_b:
                causal[i * M : (i + 1) * M, (i + l) * K : (i + l + 1) * K] = block
            else:
                j = (i + l) % N_b
                interf[i * M : (i + 1) * M, j * K : (j + 1) * K] = block
    cir = causal + interf
    return (
        BlockStackedChannel(cir, "circulant", N_b),
        BlockStackedChannel(causal, "causal-part", N_b),
        BlockStackedChannel(interf, "interference-part", N_b),
    )


def freq_channel(taps: ChannelTaps, N_b: int, rho_q: float = 0.0) -> FreqChannel:
    """Per-subband channel matrices H_fi = (1-rho_q) * sum_l H_l e^{-j 2pi l i / N_b}.

    The tap-wise transform is the unnormalized DFT over the tap index.
    """
    L = taps.memory
    if N_b < L + 1:
        raise DimensionError(f"N_b={N_b} must be >= L+1={L + 1}")
    if not (0.0 <= rho_q < 1.0):
        raise ConfigurationError("rho_q must lie in [0, 1)")
    sub = np.fft.fft(taps.taps, n=N_b, axis=0) * (1.0 - rho_q)
    return FreqChannel(subbands=sub, includes_bussgang_gain=rho_q != 0.0)


def convolve_transmit(
    taps: ChannelTaps,
    x: np.ndarray,
    noise_std: float,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Pass a K x T symbol stream through the channel: y[n] = sum_l H_l x[n-l] + eta[n].

    Symbols before the stream start are zero.  Noise is i.i.d. circularly
    symmetric complex Gaussian with total variance noise_std^2 per antenna.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 2 or x.shape[0] != taps.n_users:
        raise DimensionError(f"x must be K x T with K={taps.n_users}")
    T = x.shape[1]
    if T < 1:
        raise DimensionError("stream length must be >= 1")
    M = taps.n_rx
    y = np.zeros((M, T), dtype=np.complex128)
    for l in range(taps.memory + 1):
        if l >= T:
            break
        y[:, l:] += taps.taps[l] @ x[:, : T - l]
    if noise_std > 0:
        if rng is None:
            raise ConfigurationError("rng required when noise_std > 0")
        y += (noise_std / np.sqrt(2.0)) * (
            rng.standard_normal((M, T)) + 1j * rng.standard_normal((M, T))
        )
    return y


def write_taps_csv(taps: ChannelTaps, path_or_file) -> None:
    """Export nonzero scalar channel entries as CSV (tap,rx,user,re,im)."""

    def _write(f):
        w = csv.writer(f)
        w.writerow(["tap", "rx", "user", "re", "im"])
        arr = taps.taps
        for l, m, k in zip(*np.nonzero(arr)):
            v = arr[l, m, k]
            w.writerow([l, m, k, repr(float(v.real)), repr(float(v.imag))])

    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "w", newline="") as f:
            _write(f)
    else:
        _write(path_or_file)


def read_taps_csv(
    path_or_file,
    total_taps: int | None = None,
    M: int | None = None,
    K: int | None = None,
) -> ChannelTaps:
    """Import channel taps from CSV; dimensions inferred from indices unless given."""
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, newline="") as f:
            rows = list(csv.DictReader(f))
    else:
        rows = list(csv.DictReader(path_or_file))
    if not rows:
        raise ConfigurationError("empty channel CSV")
    entries = [
        (int(r["tap"]), int(r["rx"]), int(r["user"]), float(r["re"]), float(r["im"]))
        for r in rows
    ]
    total_taps = total_taps or (max(e[0] for e in entries) + 1)
    M = M or (max(e[1] for e in entries) + 1)
    K = K or (max(e[2] for e in entries) + 1)
    taps = np.zeros((total_taps, M, K), dtype=np.complex128)
    for l, m, k, re, im in entries:
        taps[l, m, k] = re + 1j * im
    return ChannelTaps(taps)
