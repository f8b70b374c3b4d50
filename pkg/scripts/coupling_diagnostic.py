"""How strongly the epsilon tail couples the three clusters.

For the perturbed kernel the cross-cluster weights are
``eps * exp(-t^2 / w^2)`` with ``w = r + eps`` by default. This script
reports, for several tail widths ``w``, the total cross-cluster weight per
unit epsilon, the ratio sigma_2 / eps of the Laplacian, and the probit
error at (alpha 6, eps/tau^2 0.5, tau 0.1). Majority propagation needs the
coupling to be of order one.

    python3 scripts/coupling_diagnostic.py
"""

import argparse

import numpy as np

from ssl_lab.experiments import SweepGrid, generate_clustered_mixture, sweep_accuracy
from ssl_lab.graph import PerturbedThreshold, build_laplacian, build_weight_matrix
from ssl_lab.spectral import eigendecompose


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--widths", type=float, nargs="*", default=[0.5, 0.7, 1.0, 1.5])
    ap.add_argument("--eps", type=float, default=5e-3)
    args = ap.parse_args()

    data = generate_clustered_mixture()
    same = data.clusters[:, None] == data.clusters[None, :]
    print(f"{'tail width':>12} {'cross weight/eps':>17} {'sigma2/eps':>11} {'rate':>6}")
    for w in [None] + list(args.widths):
        g = build_weight_matrix(data.cloud, PerturbedThreshold(0.25, args.eps, w))
        cross = g.weights[~same].sum() / 2 / args.eps
        sigma2 = eigendecompose(build_laplacian(g)).eigenvalues[1] / args.eps
        grid = SweepGrid(alpha_values=(6.0,), eps_over_tau2_values=(0.5,), tail_width=w)
        rate = sweep_accuracy(grid, data).rows[0]["rate"]
        label = "r + eps" if w is None else f"{w:g}"
        print(f"{label:>12} {cross:17.4g} {sigma2:11.4g} {rate:6.3f}")


if __name__ == "__main__":
    main()
