"""``ssl-lab`` command-line entry point.

Exit status is 0 on success, 2 for configuration errors and 3 when a
solver fails (outputs written so far are flagged as partial in the
manifest). Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__, io, onehot, probit
from .config import ConfigError, RunConfig, apply_override, parse_overrides
from .errors import SSLError
from .experiments import (Cell, MixtureData, SpectralCache, balance_study, exact_labels,
                          generate_clustered_mixture, generate_mixture, misclassification_rate,
                          place_labels, spectral_sweep, success_grid, sweep_accuracy)
from .likelihood import (BinaryLabels, MultiLabels, sample_binary_labels,
                         sample_multiclass_labels)
from .spectral import covariance_from

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

HEATMAP_COLUMNS = ("alpha", "eps_over_tau2", "tau2", "rate")
SUCCESS_COLUMNS = ("alpha", "eps_over_tau2", "tau2", "success", "stderr")
SPECTRUM_COLUMNS = ("epsilon", "tau2", "alpha", "k", "sigma_k", "lambda_k")
DIAGNOSTIC_COLUMNS = ("eps", "tau2", "alpha", "lambda2", "lambda3", "lambda4",
                      "lambda2_minus_1", "lambda3_minus_1", "proj_residual2", "proj_residual3")


class SolverFailure(Exception):
    def __init__(self, message, outputs=()):
        super().__init__(message)
        self.outputs = list(outputs)


class Run:
    """State shared by the subcommands: config, seed, output directory and manifest."""

    def __init__(self, command, config: RunConfig, raw: dict, overrides, seed, threads, out):
        self.command = command
        self.config = config
        self.raw = raw
        self.overrides = overrides
        self.seed = seed
        self.threads = threads
        self.out = Path(out)
        self.outputs: list[str] = []
        self.extra: dict = {}

    def path(self, name: str) -> Path:
        p = self.out / name
        self.outputs.append(name)
        return p

    # -- data ------------------------------------------------------------------
    def data(self) -> MixtureData:
        ds = self.config.dataset
        if ds.points is not None:
            self.extra["dataset_source"] = {"points": ds.points, "truth": ds.truth}
            return io.load_mixture(ds.points, ds.truth)
        spec = ds.synthetic_spec(self.seed)
        if ds.require_clustered:
            data = generate_clustered_mixture(spec, radius=self.config.kernel.radius)
        else:
            data = generate_mixture(spec)
        self.extra["dataset_seed"] = data.spec.seed
        return data

    def cache(self, data) -> SpectralCache:
        k = self.config.kernel
        return SpectralCache(data, k.radius, k.p, tail_width=k.tail_width)

    def labels(self, data, method):
        lc = self.config.labels
        if lc.mode == "file":
            idx, vals = io.read_labels(lc.file)
            if method == "probit":
                return BinaryLabels(idx, vals)
            return MultiLabels(idx, vals, data.n_clusters)
        labelled = place_labels(data, lc.counts)
        if lc.mode == "exact":
            return exact_labels(data, labelled, method)
        if method == "probit":
            return sample_binary_labels(data.binary_latent(), labelled, self.config.noise,
                                        self.seed, lc.trial)
        return sample_multiclass_labels(data.onehot_latent(), labelled, self.config.noise,
                                        self.seed, lc.trial)

    def grid(self, method=None):
        g = self.config.grid
        k = self.config.kernel
        upd = {"radius": k.radius, "tail_width": k.tail_width}
        if method:
            upd["method"] = method
        return replace(g, **upd)


# -- subcommands -------------------------------------------------------------------

def cmd_gen_data(run: Run) -> None:
    data = run.data()
    io.write_points(run.path("points.csv"), data.cloud)
    io.write_truth(run.path("truth.csv"), data)


def cmd_spectrum(run: Run) -> None:
    data = run.data()
    sc = run.config.spectrum
    cache = run.cache(data)
    rows = []
    for eps in sc.eps_values:
        dec = cache.decomposition(eps)
        for tau in sc.tau_values:
            cov = covariance_from(dec, tau * tau, sc.alpha)
            for k in range(min(sc.n_eigs, data.n)):
                rows.append((float(eps), tau * tau, sc.alpha, k,
                             float(dec.eigenvalues[k]), float(cov.inv_eigenvalues[k])))
    io.write_csv(run.path("spectrum.csv"), SPECTRUM_COLUMNS, rows)
    diag = spectral_sweep(sc.eps_values, sc.tau_values, sc.alpha, data,
                          radius=run.config.kernel.radius, tail_width=run.config.kernel.tail_width)
    io.write_csv(run.path("spectral_diagnostics.csv"), DIAGNOSTIC_COLUMNS,
                 ([r[c] for c in DIAGNOSTIC_COLUMNS] for r in diag))


def _solve(run: Run, method: str) -> None:
    data = run.data()
    cfg = run.config
    cell = Cell(cfg.cell.alpha, cfg.cell.eps_over_tau2, cfg.cell.tau)
    cov = run.cache(data).covariance(cell.eps, cell.tau2, cell.alpha)
    labels = run.labels(data, method)
    sv = cfg.solver
    mod = probit if method == "probit" else onehot
    if method == "probit":
        problem = probit.ProbitProblem(cov, labels, cfg.noise)
    else:
        problem = onehot.OneHotProblem(cov, labels, cfg.noise)
    kw = {"tol": sv.tol, "max_iter": sv.max_iter}
    try:
        if sv.method == "truncated":
            sol = mod.solve_truncated(problem, sv.rank, **kw)
        elif sv.method == "reduced":
            sol = mod.solve_reduced(problem, **kw)
        else:
            sol = mod.solve_full(problem, **kw)
    except SSLError as exc:
        raise SolverFailure(f"{type(exc).__name__}: {exc}") from exc
    truth = data.binary_truth if method == "probit" else data.clusters
    pred = sol.predicted_labels
    doc = {
        "method": method, "solver": sv.method,
        "cell": {"alpha": cell.alpha, "eps_over_tau2": cell.eps_over_tau2, "tau2": cell.tau2,
                 "eps": cell.eps},
        "observed": {"indices": labels.indices.tolist(), "labels": labels.values.tolist()},
        "labels": pred.tolist(),
        "misclassification_rate": misclassification_rate(pred, truth),
        "diagnostics": sol.diagnostics,
    }
    if method == "probit":
        doc["u_star"] = sol.u_star.tolist()
    else:
        doc["U_star"] = sol.U_star.tolist()
    io.write_json(run.path("solution.json"), doc)
    io.write_labels(run.path("labels.csv"), np.arange(data.n), pred)


def cmd_probit(run: Run) -> None:
    _solve(run, "probit")


def cmd_onehot(run: Run) -> None:
    _solve(run, "onehot")


def _write_heatmap(run: Run, table) -> None:
    io.write_table(run.path("heatmap.csv"), table, HEATMAP_COLUMNS)
    failed = [r for r in table.rows if r["status"] != "ok"]
    run.extra["cells"] = len(table.rows)
    run.extra["failed_cells"] = [{k: r[k] for k in ("alpha", "eps_over_tau2", "tau2", "status")}
                                 for r in failed]
    if failed:
        raise SolverFailure(f"{len(failed)} of {len(table.rows)} cells failed")


def cmd_sweep(run: Run) -> None:
    data = run.data()
    grid = run.grid()
    table = sweep_accuracy(grid, data, threads=run.threads, cache=run.cache(data))
    _write_heatmap(run, table)


def cmd_success_prob(run: Run) -> None:
    data = run.data()
    grid = run.grid()
    trials = run.config.study.trials
    run.extra["trials"] = trials
    table = success_grid(grid, data, trials, run.seed, threads=run.threads,
                         cache=run.cache(data))
    io.write_table(run.path("success.csv"), table, SUCCESS_COLUMNS)


def cmd_balance(run: Run) -> None:
    data = run.data()
    st = run.config.study
    grid = run.grid()
    run.extra["label_counts"] = list(st.label_counts)
    if st.success:
        table = balance_study(st.label_counts, grid, data, trials=st.trials, seed=run.seed,
                              threads=run.threads, cache=run.cache(data))
        io.write_table(run.path("success.csv"), table, SUCCESS_COLUMNS)
    else:
        table = balance_study(st.label_counts, grid, data, threads=run.threads,
                              cache=run.cache(data))
        _write_heatmap(run, table)


COMMANDS = {
    "gen-data": (cmd_gen_data, "generate the synthetic mixture (points.csv, truth.csv)"),
    "spectrum": (cmd_spectrum, "low-lying spectrum and eigenvector drift (spectrum.csv)"),
    "probit": (cmd_probit, "solve one binary problem (solution.json, labels.csv)"),
    "onehot": (cmd_onehot, "solve one multi-class problem (solution.json, labels.csv)"),
    "sweep": (cmd_sweep, "accuracy heat map over the grid (heatmap.csv)"),
    "success-prob": (cmd_success_prob, "Monte-Carlo success probability map (success.csv)"),
    "balance": (cmd_balance, "accuracy heat map for given label counts per cluster"),
}


# -- driver ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssl-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=1, help="top-level seed (default 1)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker cap (default: $SSL_LAB_THREADS or 1)")
        p.add_argument("-o", "--output", default="out", help="output directory")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="dotted config override, repeatable")
    return parser


def _threads(arg) -> int:
    if arg is not None:
        n = arg
    else:
        env = os.environ.get("SSL_LAB_THREADS", "")
        try:
            n = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"SSL_LAB_THREADS={env!r} is not an integer") from None
    if n < 1:
        raise ConfigError("thread count must be at least 1")
    return n


def _error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def _versions() -> dict:
    return {"ssl_lab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        raw = io.read_json(args.config) if args.config else {}
        overrides = parse_overrides(args.overrides)
        for key, value in overrides:
            raw = apply_override(raw, key, value)
        config = RunConfig.from_mapping(raw)
        threads = _threads(args.threads)
        if args.seed < 0:
            raise ConfigError("seed must be nonnegative")
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        _error("config", str(exc))
        return EXIT_CONFIG

    run = Run(args.command, config, raw, overrides, args.seed, threads, args.output)
    status, code, message = "ok", EXIT_OK, None
    try:
        run.out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command][0](run)
    except SolverFailure as exc:
        status, code, message = "solver_failure", EXIT_SOLVER, str(exc)
        _error("solver", message)
    except (ValueError, IndexError, KeyError, OSError) as exc:
        status, code, message = "config_error", EXIT_CONFIG, str(exc)
        _error("config", message)
    except SSLError as exc:
        status, code, message = "solver_failure", EXIT_SOLVER, f"{type(exc).__name__}: {exc}"
        _error("solver", message)

    manifest = {
        "command": args.command, "status": status, "error": message,
        "partial": code == EXIT_SOLVER,
        "seed": args.seed, "threads": threads,
        "overrides": [{"key": k, "value": v} for k, v in overrides],
        "config": config.to_dict(), "outputs": run.outputs,
        "versions": _versions(), "wall_time_s": round(time.perf_counter() - t0, 6),
        **run.extra,
    }
    try:
        io.write_json(run.out / "manifest.json", manifest)
    except OSError as exc:
        _error("io", str(exc))
        return code or EXIT_CONFIG
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
