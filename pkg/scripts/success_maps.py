"""Monte-Carlo success probability (all labels correct) over an (alpha, eps/tau^2) grid.

    python3 scripts/success_maps.py --gamma 0.3 --trials 100 -o results/success
"""

import argparse
from pathlib import Path

import numpy as np

from ssl_lab import io
from ssl_lab.experiments import SweepGrid, generate_clustered_mixture, success_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-o", "--output", default="results/success")
    ap.add_argument("--method", default="probit", choices=["probit", "onehot"])
    ap.add_argument("--gamma", type=float, default=0.3)
    ap.add_argument("--tau", type=float, default=0.5)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--size", type=int, default=8, help="grid points per axis")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    grid = SweepGrid(alpha_values=tuple(np.round(np.geomspace(0.5, 8, args.size), 6)),
                     eps_over_tau2_values=tuple(np.round(np.geomspace(0.01, 1.0, args.size), 6)),
                     tau_values=(args.tau,), gamma=args.gamma, method=args.method)
    table = success_grid(grid, generate_clustered_mixture(), args.trials, args.seed, threads=args.threads)
    io.write_table(Path(args.output) / f"success_{args.method}.csv", table,
                   ("alpha", "eps_over_tau2", "tau2", "success", "stderr"))
    for alpha in grid.alpha_values:
        vals = [r["success"] for r in table.rows if r["alpha"] == alpha]
        print(f"alpha {alpha:6.3f}  " + " ".join(f"{v:4.2f}" for v in vals))


if __name__ == "__main__":
    main()
