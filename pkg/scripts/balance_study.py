"""Transition point of the accuracy heat map for different label counts per cluster.

For each count vector, reports the first eps/tau^2 along each alpha row
where more than 25% of the nodes are mislabelled.

    python3 scripts/balance_study.py --method onehot
"""

import argparse
from pathlib import Path

from ssl_lab import io
from ssl_lab.experiments import (SpectralCache, SweepGrid, balance_study,
                                 generate_clustered_mixture, transition_point)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-o", "--output", default="results/balance")
    ap.add_argument("--method", default="onehot", choices=["probit", "onehot"])
    ap.add_argument("--counts", nargs="+", default=["1,1,1", "3,3,3", "3,1,1"])
    ap.add_argument("--alphas", type=float, nargs="+", default=[1.0, 2.0, 4.0, 8.0])
    ap.add_argument("--tail-width", type=float, default=None)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    data = generate_clustered_mixture()
    cache = SpectralCache(data, 0.25, tail_width=args.tail_width)
    grid = SweepGrid(alpha_values=tuple(args.alphas), method=args.method, tail_width=args.tail_width)
    for text in args.counts:
        counts = tuple(int(c) for c in text.split(","))
        table = balance_study(counts, grid, data, threads=args.threads, cache=cache)
        name = "_".join(map(str, counts))
        io.write_table(Path(args.output) / f"balance_{args.method}_{name}.csv", table,
                       ("alpha", "eps_over_tau2", "tau2", "rate"))
        points = {a: transition_point(table, a) for a in args.alphas}
        print(f"counts {counts}: " + ", ".join(f"alpha {a:g} -> {p}" for a, p in points.items()))


if __name__ == "__main__":
    main()
