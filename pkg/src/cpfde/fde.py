"""Frequency-domain block equalization with overlap-save streaming.

The block-circulant channel approximation is diagonalized subband-by-subband,
a K x M MMSE filter is precomputed per subband for the coherence block, and
received blocks are equalized through a row-wise FFT / per-subband filter /
row-wise inverse FFT pipeline.  A dense time-domain Wiener filter is provided
as an oracle for small instances.

Convention: blocks are newest-sample-first (column 0 holds time n).  With that
ordering a delay by l taps is a cyclic shift by +l columns, so the unitary
transform that diagonalizes the circulant onto the tap-wise DFT subbands is
F[a, b] = exp(+2j pi a b / N) / sqrt(N); its conjugate maps back to time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import BlockStackedChannel, FreqChannel
from .errors import ConfigurationError, DimensionError, SizeGuardError
from .quant import BussgangModel

DENSE_SIZE_CAP = 4096


@dataclass(frozen=True)
class FdeConfig:
    """Block length, overlap and estimator variant for the equalizer."""

    block_len: int
    overlap: int
    sigma_x2: float = 1.0
    account_quantization: bool = True
    discard_split: str = "newest"  # "newest" or "symmetric"

    def __post_init__(self):
        if self.overlap < 0:
            raise ConfigurationError("overlap must be >= 0")
        if self.block_len < self.overlap + 1:
            raise ConfigurationError(
                f"block_len={self.block_len} must be >= overlap+1={self.overlap + 1}"
            )
        if not (self.sigma_x2 > 0):
            raise ConfigurationError("sigma_x2 must be positive")
        if self.discard_split not in ("newest", "symmetric"):
            raise ConfigurationError(f"unknown discard_split {self.discard_split!r}")

    @property
    def pre_discard(self) -> int:
        """Samples discarded at the newest-sample edge of each block.

        The post-filter interference of the causal channel concentrates on the
        newest L' positions, so the default puts the entire discard there; the
        symmetric ceil/floor split is available for comparison.
        """
        if self.discard_split == "newest":
            return self.overlap
        return (self.overlap + 1) // 2

    @property
    def post_discard(self) -> int:
        """Samples discarded at the oldest-sample edge of each block."""
        return self.overlap - self.pre_discard


@dataclass(frozen=True)
class SubbandFilterBank:
    """Per-subband MMSE filters, shape (N_b, K, M), immutable after build."""

    filters: np.ndarray
    sigma_x2: float
    rho_q: float

    @property
    def block_len(self) -> int:
        return self.filters.shape[0]

    @property
    def n_users(self) -> int:
        return self.filters.shape[1]

    @property
    def n_rx(self) -> int:
        return self.filters.shape[2]


def unitary_dft_matrix(n: int) -> np.ndarray:
    """The unitary transform F used throughout (positive-exponent kernel)."""
    idx = np.arange(n)
    return np.exp(2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)


def to_subbands(rows: np.ndarray) -> np.ndarray:
    """Row-wise unitary transform of newest-first time columns into subbands."""
    n = rows.shape[-1]
    return np.fft.ifft(rows, axis=-1) * np.sqrt(n)


def to_time(rows: np.ndarray) -> np.ndarray:
    """Inverse of to_subbands."""
    n = rows.shape[-1]
    return np.fft.fft(rows, axis=-1) / np.sqrt(n)


def build_filter_bank(
    fc: FreqChannel, bm: BussgangModel, cfg: FdeConfig
) -> SubbandFilterBank:
    """Per-subband MMSE filters G_fi = (H^H D^-1 H + I/sigma_x^2)^-1 H^H D^-1.

    With account_quantization the subband channels carry the Bussgang gain and
    D is the effective-noise diagonal; without it the quantization is ignored
    (gain stripped, D = sigma_eta^2 I).
    """
    if fc.block_len != cfg.block_len:
        raise DimensionError(
            f"frequency channel block_len {fc.block_len} != config {cfg.block_len}"
        )
    H = fc.subbands
    if cfg.account_quantization:
        if fc.includes_bussgang_gain is False and bm.rho_q != 0.0:
            H = H * bm.gain
        diag = np.asarray(bm.eff_noise_diag, dtype=np.float64)
    else:
        if fc.includes_bussgang_gain:
            H = H / bm.gain
        diag = np.full(fc.subbands.shape[1], bm.sigma_eta2)
    if np.any(diag <= 0):
        raise ConfigurationError("effective-noise diagonal must be strictly positive")
    K = H.shape[2]
    Hh = H.conj().transpose(0, 2, 1)
    O = Hh * (1.0 / diag)[None, None, :]
    gram = O @ H + (1.0 / cfg.sigma_x2) * np.eye(K)[None]
    # Hermitian positive definite for any finite sigma_x2; Cholesky solve.
    chol = np.linalg.cholesky(gram)
    G = np.linalg.solve(chol.conj().transpose(0, 2, 1), np.linalg.solve(chol, O))
    return SubbandFilterBank(filters=G, sigma_x2=cfg.sigma_x2, rho_q=bm.rho_q)


def equalize_block(R: np.ndarray, bank: SubbandFilterBank) -> np.ndarray:
    """Equalize one M x N_b receive block (columns newest-first) to K x N_b."""
    R = np.asarray(R, dtype=np.complex128)
    if R.ndim != 2 or R.shape != (bank.n_rx, bank.block_len):
        raise DimensionError(
            f"receive block must be {bank.n_rx} x {bank.block_len}, got {R.shape}"
        )
    Rf = to_subbands(R)
    Xf = np.einsum("skm,ms->ks", bank.filters, Rf)
    return to_time(Xf)


def overlap_save_stream(
    r: np.ndarray, bank: SubbandFilterBank, cfg: FdeConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Equalize an M x T_c stream block-wise with overlap and edge discard.

    Consecutive blocks advance by N_b - L'; from each equalized block the
    pre_discard newest and post_discard oldest estimates are dropped and the
    central part is emitted.  The first/last partial stream regions are taken
    from the first/last block without discard and flagged in the returned edge
    mask.  Returns (K x T_c estimates, length-T_c boolean edge mask).
    """
    r = np.asarray(r, dtype=np.complex128)
    if r.ndim != 2 or r.shape[0] != bank.n_rx:
        raise DimensionError(f"stream must be M x T with M={bank.n_rx}")
    N_b = cfg.block_len
    T = r.shape[1]
    if T < N_b:
        raise ConfigurationError(f"stream length {T} shorter than block length {N_b}")
    pre, post = cfg.pre_discard, cfg.post_discard
    step = N_b - cfg.overlap
    out = np.empty((bank.n_users, T), dtype=np.complex128)
    edge = np.zeros(T, dtype=bool)
    edge[:post] = True
    if pre:
        edge[-pre:] = True

    starts = list(range(0, T - N_b + 1, step))
    if starts[-1] != T - N_b:
        starts.append(T - N_b)  # clamped final block
    next_pos = 0
    for j, s in enumerate(starts):
        block = r[:, s : s + N_b][:, ::-1]  # newest-first column order
        est = equalize_block(block, bank)[:, ::-1]  # back to time order
        lo = 0 if j == 0 else max(next_pos, s + post)
        hi = T - 1 if j == len(starts) - 1 else s + N_b - 1 - pre
        if hi >= lo:
            out[:, lo : hi + 1] = est[:, lo - s : hi - s + 1]
            next_pos = hi + 1
    return out, edge


def time_domain_wf(
    r_stacked: np.ndarray,
    H_cir: BlockStackedChannel | np.ndarray,
    bm: BussgangModel,
    sigma_x2: float,
    size_cap: int = DENSE_SIZE_CAP,
) -> np.ndarray:
    """Dense time-domain Wiener filter oracle on the stacked M*N_b receive vector.

    Solves (H^H R^-1 H + I/sigma_x^2) x = H^H R^-1 r with R the block-constant
    diagonal lift of the per-antenna effective-noise diagonal.  Small instances
    only (M*N_b capped).
    """
    H = H_cir.matrix if isinstance(H_cir, BlockStackedChannel) else np.asarray(H_cir)
    r = np.asarray(r_stacked, dtype=np.complex128).ravel()
    if H.shape[0] != r.size:
        raise DimensionError("stacked receive vector does not match H_cir rows")
    if H.shape[0] > size_cap:
        raise SizeGuardError(f"dense instance {H.shape[0]} exceeds cap {size_cap}")
    M = bm.eff_noise_diag.shape[0]
    if H.shape[0] % M:
        raise DimensionError("H_cir rows not a multiple of the antenna count")
    N_b = H.shape[0] // M
    diag = np.tile(np.asarray(bm.eff_noise_diag, dtype=np.float64), N_b)
    Hh_Rinv = H.conj().T * (1.0 / diag)[None, :]
    gram = Hh_Rinv @ H + (1.0 / sigma_x2) * np.eye(H.shape[1])
    return np.linalg.solve(gram, Hh_Rinv @ r)


def error_profile_csv(profile: np.ndarray, path) -> None:
    """Dump a per-position error-power profile as CSV (position,error_power)."""
    with open(path, "w") as f:
        f.write("position,error_power\n")
        for i, p in enumerate(profile):
            f.write(f"{i},{p:.12g}\n")
