#!/usr/bin/env python3
"""Monte-Carlo MSE/BER sweep comparing quantization-aware and unaware filters
at the power-of-2-optimal block length versus full-coherence-time blocks.

Desk-scale defaults finish in a couple of minutes; pass --paper-scale flags
manually (antennas 64, taps 128, coherence 50000, realizations 200) for the
full-size run (hours).

Usage:
    python3 scripts/performance_sweep.py [--out results/sweep.csv] [--seed 42]
        [--antennas M] [--taps L+1] [--coherence T_C] [--realizations N]
        [--bits B] [--workers W]
"""

import argparse
from pathlib import Path

from cpfde.blockopt import ComplexityParams, optimal_block_length
from cpfde.simulate import SimConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/sweep.csv")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--users", type=int, default=2)
    ap.add_argument("--antennas", type=int, default=32)
    ap.add_argument("--taps", type=int, default=16)
    ap.add_argument("--coherence", type=int, default=2048)
    ap.add_argument("--realizations", type=int, default=20)
    ap.add_argument("--bits", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    L = args.taps - 1
    p = ComplexityParams(K=args.users, M=args.antennas, L_prime=L, T_c=args.coherence)
    n_pow2 = optimal_block_length(p).n_opt_pow2
    cfg = SimConfig(
        K=args.users,
        M=args.antennas,
        L=L,
        T_c=args.coherence,
        N_sim=args.realizations,
        quant_bits=args.bits,
        block_lens=(n_pow2, args.coherence),
        seed=args.seed,
        workers=args.workers,
    )
    print(f"block lengths: n_opt_pow2={n_pow2}, full={args.coherence}")
    report = run_experiment(cfg)
    for r in report.rows:
        print(
            f"ebn0={r.ebn0_db:g} n_b={r.n_b} {r.method}: "
            f"mse={r.mse:.6g} (+-{r.mse_stderr:.2g}) ber={r.ber:.6g}"
        )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.to_csv(out)
    report.write_metadata(out.with_suffix(out.suffix + ".json"))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
