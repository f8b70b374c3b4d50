"""Accuracy heat maps over (alpha, eps/tau^2) for the probit and one-hot methods.

Writes ``heatmap_<method>.csv`` (alpha, eps_over_tau2, tau2, rate) and prints
each alpha row as a compact text map.

    python3 scripts/heatmaps.py -o results/heatmaps --threads 4
"""

import argparse
from pathlib import Path

from ssl_lab import io
from ssl_lab.experiments import SweepGrid, generate_clustered_mixture, sweep_accuracy


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-o", "--output", default="results/heatmaps")
    ap.add_argument("--methods", nargs="+", default=["probit", "onehot"])
    ap.add_argument("--tau", type=float, default=0.1)
    ap.add_argument("--gamma", type=float, default=0.5)
    ap.add_argument("--rank", type=int, default=10)
    ap.add_argument("--tail-width", type=float, default=None,
                    help="override the width of the epsilon tail of the kernel")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    data = generate_clustered_mixture()
    out = Path(args.output)
    for method in args.methods:
        grid = SweepGrid(tau_values=(args.tau,), gamma=args.gamma, rank=args.rank,
                         method=method, tail_width=args.tail_width)
        table = sweep_accuracy(grid, data, threads=args.threads)
        io.write_table(out / f"heatmap_{method}.csv", table, ("alpha", "eps_over_tau2", "tau2", "rate"))
        print(f"{method}: rows alpha, columns eps/tau^2 from "
              f"{grid.eps_over_tau2_values[0]} to {grid.eps_over_tau2_values[-1]}")
        for alpha in grid.alpha_values:
            rates = [r["rate"] for r in table.row_for_alpha(alpha)]
            print(f"  alpha {alpha:7.3f}  " + " ".join(f"{100 * v:3.0f}" for v in rates))


if __name__ == "__main__":
    main()
