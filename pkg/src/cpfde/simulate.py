"""End-to-end Monte-Carlo link simulation: QAM uplink through a quantized
multiantenna receiver with frequency-domain equalization.

Each channel realization is an independent work unit with its own RNG stream
split from the master seed; accumulation runs in realization order so results
are identical for any worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .channel import (
    ChannelTaps,
    PowerDelayProfile,
    convolve_transmit,
    freq_channel,
    generate_channel,
)
from .errors import ConfigurationError
from .fde import FdeConfig, build_filter_bank, equalize_block, overlap_save_stream
from .quant import bussgang_model, design_quantizer, per_antenna_agc, quantize

METHODS = ("WF", "WF_Q")


# --------------------------------------------------------------------------
# Gray-mapped square QAM
# --------------------------------------------------------------------------

def _gray_to_binary(g: np.ndarray, width: int) -> np.ndarray:
    b = g.copy()
    shift = 1
    while shift < width:
        b ^= b >> shift
        shift *= 2
    return b


def _binary_to_gray(b: np.ndarray) -> np.ndarray:
    return b ^ (b >> 1)


def _qam_params(order: int) -> tuple[int, int, float]:
    side = int(round(np.sqrt(order)))
    if side * side != order or order < 4 or (side & (side - 1)):
        raise ConfigurationError(f"modulation order {order} is not a square QAM order")
    bits_per_axis = side.bit_length() - 1
    scale = np.sqrt(3.0 / (2.0 * (order - 1)))  # unit average symbol energy
    return side, bits_per_axis, scale


def map_symbols(bits: np.ndarray, order: int) -> np.ndarray:
    """Map a 0/1 bit stream to Gray-coded square QAM with unit average energy."""
    side, bpa, scale = _qam_params(order)
    bits = np.asarray(bits, dtype=np.int64).ravel()
    B = 2 * bpa
    if bits.size % B:
        raise ConfigurationError(f"bit count {bits.size} not divisible by {B}")
    groups = bits.reshape(-1, B)
    weights = 1 << np.arange(bpa - 1, -1, -1)
    gi = groups[:, :bpa] @ weights
    gq = groups[:, bpa:] @ weights
    li = _gray_to_binary(gi, bpa)
    lq = _gray_to_binary(gq, bpa)
    re = (2 * li - (side - 1)) * scale
    im = (2 * lq - (side - 1)) * scale
    return re + 1j * im


def demap_symbols(estimates: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-distance detection: hard symbols plus recovered Gray bits.

    Midpoint ties break toward the lexicographically smaller (real, imag) point.
    """
    side, bpa, scale = _qam_params(order)
    est = np.asarray(estimates, dtype=np.complex128).ravel()

    def axis_index(v):
        u = v / scale
        idx = np.ceil((u + side) / 2.0) - 1
        return np.clip(idx, 0, side - 1).astype(np.int64)

    li = axis_index(est.real)
    lq = axis_index(est.imag)
    symbols = ((2 * li - (side - 1)) + 1j * (2 * lq - (side - 1))) * scale
    gi = _binary_to_gray(li)
    gq = _binary_to_gray(lq)
    shifts = np.arange(bpa - 1, -1, -1)
    bits = np.empty((est.size, 2 * bpa), dtype=np.int64)
    bits[:, :bpa] = (gi[:, None] >> shifts) & 1
    bits[:, bpa:] = (gq[:, None] >> shifts) & 1
    return symbols.reshape(np.shape(estimates)), bits.ravel()


# --------------------------------------------------------------------------
# Configuration and report
# --------------------------------------------------------------------------

@dataclass
class SimConfig:
    """Monte-Carlo experiment description (desk-scale defaults)."""

    K: int = 2
    M: int = 32
    L: int = 15
    pdp: PowerDelayProfile | None = None  # defaults to uniform over L+1 taps
    modulation: int = 16
    T_c: int = 2048
    N_sim: int = 20
    ebn0_grid: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0)
    block_lens: tuple[int, ...] = (64, 2048)
    quant_bits: int | None = 1  # None disables quantization entirely
    methods: tuple[str, ...] = METHODS
    seed: int = 0
    sigma_eta2: float = 1.0
    overlap: int | None = None  # defaults to channel memory L
    exclude_edges: bool = True
    ebn0_ref_len: int | None = None  # defaults to min(block_lens)
    fixed_sigma_x2: float | None = None  # bypass the Eb/N0 mapping when set
    workers: int = 1

    def __post_init__(self):
        if self.pdp is None:
            self.pdp = PowerDelayProfile.uniform(self.L + 1)
        if self.pdp.memory != self.L:
            raise ConfigurationError("power-delay profile length disagrees with L")
        if self.overlap is None:
            self.overlap = self.L
        for n_b in self.block_lens:
            if n_b < self.L + 1:
                raise ConfigurationError(f"block length {n_b} < L+1={self.L + 1}")
            if n_b > self.T_c:
                raise ConfigurationError(f"block length {n_b} > T_c={self.T_c}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigurationError(f"unknown method {m!r}")
        _qam_params(self.modulation)

    @property
    def bits_per_symbol(self) -> int:
        return self.modulation.bit_length() - 1

    def snapshot(self) -> dict:
        d = asdict(self)
        d["pdp"] = {"entries": list(self.pdp.entries), "total_taps": self.pdp.total_taps}
        return d


@dataclass(frozen=True)
class SimRow:
    ebn0_db: float
    n_b: int
    method: str
    mse: float
    ber: float
    symbols_counted: int
    edge_symbols_excluded: int
    mse_stderr: float


@dataclass
class SimReport:
    """Per-grid-point MSE/BER results plus the reproducing configuration."""

    rows: list[SimRow]
    config: dict
    seed: int
    realization_mse: dict = field(default_factory=dict)  # (ebn0, n_b, method) -> array

    def row(self, ebn0_db: float, n_b: int, method: str) -> SimRow:
        for r in self.rows:
            if r.ebn0_db == ebn0_db and r.n_b == n_b and r.method == method:
                return r
        raise KeyError((ebn0_db, n_b, method))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            f.write("ebn0_db,n_b,method,mse,ber,symbols,edge_excluded,seed\n")
            for r in self.rows:
                f.write(
                    f"{r.ebn0_db:.12g},{r.n_b},{r.method},{r.mse:.12g},"
                    f"{r.ber:.12g},{r.symbols_counted},{r.edge_symbols_excluded},{self.seed}\n"
                )

    def write_metadata(self, path) -> None:
        with open(path, "w") as f:
            json.dump({"seed": self.seed, "config": self.config}, f, indent=2, default=str)


# --------------------------------------------------------------------------
# Eb/N0 bookkeeping
# --------------------------------------------------------------------------

def ebn0_to_sigma_x2(
    ebn0_db: float, taps_ensemble_trace: float, cfg: SimConfig, N_b_ref: int
) -> float:
    """Per-user transmit power sigma_x^2 for a target Eb/N0 in dB.

    taps_ensemble_trace is the ensemble average of the per-realization tap
    energy sum_l ||H_l||_F^2; the stacked-channel trace at the reference block
    length is N_b_ref times that.  Total power P_t = K sigma_x^2.
    """
    if not (taps_ensemble_trace > 0):
        raise ConfigurationError("trace estimate must be positive")
    trace = N_b_ref * taps_ensemble_trace
    ebn0 = 10.0 ** (ebn0_db / 10.0)
    pt = ebn0 * cfg.K * cfg.M * cfg.sigma_eta2 * cfg.bits_per_symbol / trace
    return pt / cfg.K


# --------------------------------------------------------------------------
# Monte-Carlo engine
# --------------------------------------------------------------------------

def _realization_taps(cfg: SimConfig, index: int) -> ChannelTaps:
    ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(0, index))
    return generate_channel(cfg.pdp, cfg.M, cfg.K, np.random.default_rng(ss))


def _grid(cfg: SimConfig):
    return [
        (ebn0, n_b, method)
        for ebn0 in cfg.ebn0_grid
        for n_b in cfg.block_lens
        for method in cfg.methods
    ]


def _run_one_realization(args):
    cfg, index, sigma_x2_by_ebn0 = args
    taps = _realization_taps(cfg, index)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(1, index)))
    B = cfg.bits_per_symbol
    bits = rng.integers(0, 2, size=cfg.K * cfg.T_c * B)
    unit_syms = map_symbols(bits, cfg.modulation).reshape(cfg.K, cfg.T_c)
    bits_k = bits.reshape(cfg.K, cfg.T_c * B)

    out = {}
    for ebn0 in cfg.ebn0_grid:
        sigma_x2 = sigma_x2_by_ebn0[ebn0]
        x = np.sqrt(sigma_x2) * unit_syms
        y = convolve_transmit(taps, x, np.sqrt(cfg.sigma_eta2), rng)
        if cfg.quant_bits is None:
            r = y
            rho = 0.0
        else:
            stds = per_antenna_agc(taps, sigma_x2, cfg.sigma_eta2)
            specs = [design_quantizer(cfg.quant_bits, s) for s in stds]
            r = quantize(y, specs)
            rho = specs[0].rho_q
        bm_q = bussgang_model(taps, rho, cfg.sigma_eta2, sigma_x2)
        bm_0 = bussgang_model(taps, 0.0, cfg.sigma_eta2, sigma_x2)
        for n_b in cfg.block_lens:
            for method in cfg.methods:
                account = method == "WF_Q"
                fde_cfg = FdeConfig(
                    block_len=n_b,
                    overlap=cfg.overlap,
                    sigma_x2=sigma_x2,
                    account_quantization=account,
                )
                fc = freq_channel(taps, n_b, rho if account else 0.0)
                bank = build_filter_bank(fc, bm_q if account else bm_0, fde_cfg)
                xhat, edge = overlap_save_stream(r, bank, fde_cfg)
                keep = ~edge if cfg.exclude_edges else np.ones_like(edge)
                # MSE per unit symbol energy: fixed unit change, not blind scaling
                err = (xhat - x) / np.sqrt(sigma_x2)
                sq = float(np.sum(np.abs(err[:, keep]) ** 2))
                n_sym = int(cfg.K * np.count_nonzero(keep))
                # BER on the same retained positions, against the scaled constellation
                _, rx_bits = demap_symbols(xhat[:, keep] / np.sqrt(sigma_x2), cfg.modulation)
                tx_bits = bits_k[:, np.repeat(keep, B)].ravel()
                n_bit_err = int(np.count_nonzero(rx_bits != tx_bits))
                out[(ebn0, n_b, method)] = (sq, n_sym, n_bit_err, n_sym * B)
    return index, out


def run_experiment(cfg: SimConfig) -> SimReport:
    """Run the full Monte-Carlo sweep over (Eb/N0 x N_b x method).

    Deterministic for a fixed seed; channel and data/noise streams are split
    per realization index, and reduction runs in index order regardless of the
    worker count.
    """
    # Pass 1: ensemble trace for the Eb/N0 -> sigma_x^2 mapping.
    trace_avg = float(
        np.mean([_realization_taps(cfg, i).energy() for i in range(cfg.N_sim)])
    )
    ref = cfg.ebn0_ref_len or min(cfg.block_lens)
    if cfg.fixed_sigma_x2 is not None:
        sigma_x2_by_ebn0 = {e: cfg.fixed_sigma_x2 for e in cfg.ebn0_grid}
    else:
        sigma_x2_by_ebn0 = {
            e: ebn0_to_sigma_x2(e, trace_avg, cfg, ref) for e in cfg.ebn0_grid
        }

    tasks = [(cfg, i, sigma_x2_by_ebn0) for i in range(cfg.N_sim)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_one_realization, tasks))
    else:
        results = [_run_one_realization(t) for t in tasks]
    results.sort(key=lambda r: r[0])  # fixed-order reduction

    grid = _grid(cfg)
    per_real_mse = {g: np.empty(cfg.N_sim) for g in grid}
    totals = {g: [0.0, 0, 0, 0] for g in grid}
    for index, out in results:
        for g in grid:
            sq, n_sym, n_bit_err, n_bits = out[g]
            per_real_mse[g][index] = sq / n_sym
            t = totals[g]
            t[0] += sq
            t[1] += n_sym
            t[2] += n_bit_err
            t[3] += n_bits

    rows = []
    for (ebn0, n_b, method) in grid:
        sq, n_sym, n_bit_err, n_bits = totals[(ebn0, n_b, method)]
        vals = per_real_mse[(ebn0, n_b, method)]
        stderr = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
        excluded = cfg.N_sim * cfg.K * cfg.T_c - n_sym
        rows.append(
            SimRow(
                ebn0_db=ebn0,
                n_b=n_b,
                method=method,
                mse=sq / n_sym,
                ber=n_bit_err / n_bits,
                symbols_counted=n_sym,
                edge_symbols_excluded=excluded,
                mse_stderr=stderr,
            )
        )
    return SimReport(
        rows=rows,
        config=cfg.snapshot(),
        seed=cfg.seed,
        realization_mse=per_real_mse,
    )


def per_position_error_profile(
    cfg: SimConfig, n_b: int, ebn0_db: float | None = None
) -> np.ndarray:
    """Ensemble-averaged squared error per within-block position, discard off.

    Blocks are taken from the stream interior (full interference history) and
    equalized independently; position 0 is the newest sample of a block.
    """
    if n_b < cfg.L + 1 or n_b > cfg.T_c:
        raise ConfigurationError(f"n_b={n_b} infeasible for L={cfg.L}, T_c={cfg.T_c}")
    ebn0 = ebn0_db if ebn0_db is not None else cfg.ebn0_grid[0]
    trace_avg = float(
        np.mean([_realization_taps(cfg, i).energy() for i in range(cfg.N_sim)])
    )
    if cfg.fixed_sigma_x2 is not None:
        sigma_x2 = cfg.fixed_sigma_x2
    else:
        sigma_x2 = ebn0_to_sigma_x2(ebn0, trace_avg, cfg, cfg.ebn0_ref_len or n_b)

    acc = np.zeros(n_b)
    count = 0
    for i in range(cfg.N_sim):
        taps = _realization_taps(cfg, i)
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=cfg.seed, spawn_key=(1, i))
        )
        bits = rng.integers(0, 2, size=cfg.K * cfg.T_c * cfg.bits_per_symbol)
        x = np.sqrt(sigma_x2) * map_symbols(bits, cfg.modulation).reshape(cfg.K, cfg.T_c)
        y = convolve_transmit(taps, x, np.sqrt(cfg.sigma_eta2), rng)
        if cfg.quant_bits is None:
            r, rho = y, 0.0
        else:
            stds = per_antenna_agc(taps, sigma_x2, cfg.sigma_eta2)
            specs = [design_quantizer(cfg.quant_bits, s) for s in stds]
            r = quantize(y, specs)
            rho = specs[0].rho_q
        bm = bussgang_model(taps, rho, cfg.sigma_eta2, sigma_x2)
        fde_cfg = FdeConfig(block_len=n_b, overlap=0, sigma_x2=sigma_x2)
        bank = build_filter_bank(freq_channel(taps, n_b, rho), bm, fde_cfg)
        # skip the first block: its history is the zero-padded stream start
        for s in range(n_b, cfg.T_c - n_b + 1, n_b):
            block = r[:, s : s + n_b][:, ::-1]
            est = equalize_block(block, bank)
            ref = x[:, s : s + n_b][:, ::-1]
            acc += np.sum(np.abs(est - ref) ** 2, axis=0) / sigma_x2
            count += cfg.K
    if count == 0:
        raise ConfigurationError("T_c too short for an interior block")
    return acc / count
