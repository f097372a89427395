"""Build the WADA gain table, save it as JSON, and optionally plot G against SNR."""

import argparse
import math

from noisekit import oracles
from noisekit.wada import GAMMA_SHAPE, build_gain_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--out", default="gain_table.json")
    ap.add_argument("--plot", help="write a PNG of the table")
    args = ap.parse_args()

    table = build_gain_table(args.seed, args.samples)
    table.save(args.out)

    m1, ml = oracles.gamma_abs_moments_quadrature(GAMMA_SHAPE)
    g1, gl = oracles.gaussian_abs_moments_quadrature()
    print(f"G(-20 dB) = {table.g_values[0]:.5f}   pure Gaussian  {math.log(g1) - gl:.5f}")
    print(f"G(100 dB) = {table.g_values[-1]:.5f}   pure gamma({GAMMA_SHAPE}) {math.log(m1) - ml:.5f}")
    print(f"wrote {args.out}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(table.snr_grid_db, table.g_values)
        ax.axhline(math.log(m1) - ml, ls="--", c="gray", lw=0.8)
        ax.axhline(math.log(g1) - gl, ls=":", c="gray", lw=0.8)
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("ln E|z| - E ln|z|")
        fig.tight_layout()
        fig.savefig(args.plot, dpi=150)


if __name__ == "__main__":
    main()
