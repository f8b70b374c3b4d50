"""Synthetic three-cluster experiments: accuracy heat maps, Monte-Carlo success
probabilities, spectral sweeps and the label-balance study.

Every cell of a sweep is computed independently and results are assembled
in cell order, so outputs do not depend on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import onehot, probit
from .errors import SSLError
from .graph import (HardThreshold, PerturbedThreshold, PointCloud, build_laplacian,
                    build_weight_matrix, connected_components, weighted_indicators)
from .likelihood import (BinaryLabels, MultiLabels, NoiseModel, sample_binary_labels,
                         sample_multiclass_labels)
from .spectral import EigenDecomposition, covariance_from, eigendecompose, projection_residual

__all__ = [
    "SyntheticSpec", "MixtureData", "SweepGrid", "Cell", "HeatmapTable",
    "SuccessEstimate", "generate_mixture", "generate_clustered_mixture",
    "misclassification_rate", "place_labels", "exact_labels", "solve_cell",
    "sweep_accuracy", "success_probability", "success_grid", "spectral_sweep",
    "balance_study", "transition_point", "SpectralCache",
]


# -- data -----------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSpec:
    """Isotropic Gaussian mixture.

    ``variance`` is the per-coordinate variance of every component. The
    default 0.01 (standard deviation 0.1) is the spread at which the
    ``1{t <= 0.25}`` graph splits into exactly one component per cluster.
    """
    centers: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    per_cluster: tuple = (50, 50, 50)
    variance: float = 0.01
    seed: int = 1
    binary_classes: tuple = (1, 1, -1)

    def __post_init__(self):
        if len(self.per_cluster) != len(self.centers):
            raise ValueError("need one count per center")
        if any(c < 1 for c in self.per_cluster):
            raise ValueError("cluster counts must be positive")
        if not self.variance > 0:
            raise ValueError("variance must be positive")
        if len(self.binary_classes) != len(self.centers):
            raise ValueError("need one binary class per center")


@dataclass(frozen=True, eq=False)
class MixtureData:
    cloud: PointCloud
    clusters: np.ndarray          # ground-truth cluster id per node
    binary_truth: np.ndarray      # ±1 per node
    spec: SyntheticSpec | None = None   # None for data read from files

    @property
    def n(self) -> int:
        return self.cloud.n

    @property
    def n_clusters(self) -> int:
        if self.spec is not None:
            return len(self.spec.centers)
        return int(self.clusters.max()) + 1

    @property
    def multiclass_truth(self) -> np.ndarray:
        return self.clusters

    def binary_latent(self) -> np.ndarray:
        """Ground-truth probit latent: ±1."""
        return self.binary_truth.astype(float)

    def onehot_latent(self) -> np.ndarray:
        """Ground-truth one-hot latent: unit columns (M x N)."""
        U = np.zeros((self.n_clusters, self.n))
        U[self.clusters, np.arange(self.n)] = 1.0
        return U

    def cluster_members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.clusters == k)


def generate_mixture(spec: SyntheticSpec = SyntheticSpec()) -> MixtureData:
    rng = np.random.default_rng(spec.seed)
    centers = np.asarray(spec.centers, dtype=float)
    sd = math.sqrt(spec.variance)
    blocks, ids = [], []
    for k, (c, m) in enumerate(zip(centers, spec.per_cluster)):
        blocks.append(c + sd * rng.standard_normal((m, centers.shape[1])))
        ids.append(np.full(m, k))
    clusters = np.concatenate(ids)
    truth = np.asarray(spec.binary_classes, dtype=int)[clusters]
    return MixtureData(PointCloud(np.vstack(blocks)), clusters, truth, spec)


def generate_clustered_mixture(spec: SyntheticSpec = SyntheticSpec(), radius: float = 0.25,
                               max_tries: int = 100) -> MixtureData:
    """Draw mixtures from ``spec.seed`` upwards until the hard-threshold graph
    has one connected component per cluster. ``data.spec.seed`` records the
    seed that was used."""
    for s in range(spec.seed, spec.seed + max_tries):
        data = generate_mixture(replace(spec, seed=s))
        part = connected_components(build_weight_matrix(data.cloud, HardThreshold(radius)))
        if part.K == len(spec.centers) and np.array_equal(part.assignment, data.clusters):
            return data
    raise SSLError(f"no seed in [{spec.seed}, {spec.seed + max_tries}) gives separated clusters")


def misclassification_rate(predicted, truth) -> float:
    predicted, truth = np.asarray(predicted), np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError("predicted and truth lengths differ")
    if predicted.size == 0:
        return 0.0
    return float(np.mean(predicted != truth))


def place_labels(data: MixtureData, counts: Sequence[int]) -> np.ndarray:
    """First ``counts[k]`` nodes of each cluster k."""
    if len(counts) != data.n_clusters:
        raise ValueError("need one label count per cluster")
    if any(c < 0 for c in counts) or sum(counts) == 0:
        raise ValueError("label counts must be nonnegative and not all zero")
    out = []
    for k, c in enumerate(counts):
        members = data.cluster_members(k)
        if c > members.size:
            raise ValueError(f"cluster {k} has only {members.size} nodes, asked for {c} labels")
        out.append(members[:c])
    return np.concatenate(out)


def exact_labels(data: MixtureData, labelled, method: str):
    labelled = np.asarray(labelled, dtype=int)
    if method == "probit":
        return BinaryLabels(labelled, data.binary_truth[labelled])
    return MultiLabels(labelled, data.clusters[labelled], data.n_clusters)


# -- covariance construction ------------------------------------------------------

class SpectralCache:
    """Eigendecompositions of ``L_eps`` keyed by epsilon.

    The Laplacian depends only on epsilon, so a sweep over (alpha, tau)
    reuses one decomposition per epsilon.
    """

    def __init__(self, data: MixtureData, radius: float = 0.25, p: float = 0.0,
                 tail_width: float | None = None):
        self.data = data
        self.radius = radius
        self.p = p
        self.tail_width = tail_width
        self._store: dict[float, EigenDecomposition] = {}

    def decomposition(self, eps: float) -> EigenDecomposition:
        key = float(eps)
        dec = self._store.get(key)
        if dec is None:
            graph = build_weight_matrix(self.data.cloud, PerturbedThreshold(self.radius, key, self.tail_width))
            dec = eigendecompose(build_laplacian(graph, p=self.p))
            self._store[key] = dec
        return dec

    def covariance(self, eps: float, tau2: float, alpha: float):
        return covariance_from(self.decomposition(eps), tau2, alpha)

    def indicators(self) -> np.ndarray:
        graph = build_weight_matrix(self.data.cloud, HardThreshold(self.radius))
        return weighted_indicators(connected_components(graph), graph, self.p)


def solve_cell(method: str, cov, labels, noise: NoiseModel, rank: int | None):
    """Predicted labels for one problem instance; ``rank=None`` means no truncation."""
    if method == "probit":
        prob = probit.ProbitProblem(cov, labels, noise)
        sol = probit.solve_truncated(prob, rank) if rank else probit.solve_reduced(prob)
    elif method == "onehot":
        prob = onehot.OneHotProblem(cov, labels, noise)
        sol = onehot.solve_truncated(prob, rank) if rank else onehot.solve_reduced(prob)
    else:
        raise ValueError(f"unknown method {method!r}")
    return sol


# -- sweeps ----------------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    alpha: float
    eps_over_tau2: float
    tau: float

    @property
    def tau2(self) -> float:
        return self.tau * self.tau

    @property
    def eps(self) -> float:
        return self.eps_over_tau2 * self.tau2


def _default_alphas():
    return tuple(np.round(np.geomspace(0.25, 10, 20), 6))


def _default_ratios():
    return tuple(np.round(np.geomspace(0.01, 0.5, 20), 6))


@dataclass(frozen=True)
class SweepGrid:
    """Parameter grid for heat maps.

    With ``tau_mode="fixed"`` every cell uses ``tau_values[0]``. With
    ``"paired"`` the i-th epsilon/tau^2 value is paired with the i-th tau.
    """
    alpha_values: tuple = field(default_factory=_default_alphas)
    eps_over_tau2_values: tuple = field(default_factory=_default_ratios)
    tau_values: tuple = (0.1,)
    tau_mode: str = "fixed"
    gamma: float = 0.5
    family: str = "logistic"
    radius: float = 0.25
    rank: int | None = 10
    method: str = "probit"
    label_counts: tuple = (1, 1, 1)
    tail_width: float | None = None

    def __post_init__(self):
        vals = list(self.alpha_values) + list(self.eps_over_tau2_values) + list(self.tau_values)
        if not vals or min(vals) <= 0:
            raise ValueError("grid values must be positive")
        if self.tau_mode not in ("fixed", "paired"):
            raise ValueError("tau_mode must be 'fixed' or 'paired'")
        if self.tau_mode == "paired" and len(self.tau_values) != len(self.eps_over_tau2_values):
            raise ValueError("paired tau mode needs one tau per eps/tau^2 value")
        if self.method not in ("probit", "onehot"):
            raise ValueError("method must be 'probit' or 'onehot'")
        if not self.gamma > 0 or not self.radius > 0:
            raise ValueError("gamma and radius must be positive")

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(self.family, self.gamma)

    def cells(self) -> list[Cell]:
        out = []
        for a in self.alpha_values:
            for i, r in enumerate(self.eps_over_tau2_values):
                tau = self.tau_values[0] if self.tau_mode == "fixed" else self.tau_values[i]
                out.append(Cell(float(a), float(r), float(tau)))
        return out

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "SweepGrid":
        kw = {}
        for k, v in d.items():
            if k not in cls.__dataclass_fields__:
                raise KeyError(f"unknown grid field {k!r}")
            kw[k] = tuple(v) if isinstance(v, list) else v
        return cls(**kw)


@dataclass
class HeatmapTable:
    rows: list = field(default_factory=list)
    header: tuple = ("alpha", "eps_over_tau2", "tau2", "rate", "status", "iterations")

    def rate(self, alpha: float, ratio: float) -> float:
        for r in self.rows:
            if math.isclose(r["alpha"], alpha) and math.isclose(r["eps_over_tau2"], ratio):
                return r["rate"]
        raise KeyError((alpha, ratio))

    def row_for_alpha(self, alpha: float) -> list:
        return [r for r in self.rows if math.isclose(r["alpha"], alpha)]


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def sweep_accuracy(grid: SweepGrid, data: MixtureData, labelled=None, *, threads: int = 1,
                   cache: SpectralCache | None = None) -> HeatmapTable:
    """Misclassification rate with exact labels for every grid cell.

    A solver failure is recorded in the row's ``status`` and leaves ``rate``
    as NaN; the sweep always runs to completion.
    """
    if labelled is None:
        labelled = place_labels(data, grid.label_counts)
    labels = exact_labels(data, labelled, grid.method)
    truth = data.binary_truth if grid.method == "probit" else data.clusters
    cache = cache or SpectralCache(data, grid.radius, tail_width=grid.tail_width)
    cells = grid.cells()
    # decompositions first so workers only read the cache
    for eps in sorted({c.eps for c in cells}):
        cache.decomposition(eps)
    noise = grid.noise

    def run(cell: Cell) -> dict:
        row = {"alpha": cell.alpha, "eps_over_tau2": cell.eps_over_tau2, "tau2": cell.tau2}
        try:
            cov = cache.covariance(cell.eps, cell.tau2, cell.alpha)
            sol = solve_cell(grid.method, cov, labels, noise, grid.rank)
            row |= {"rate": misclassification_rate(sol.predicted_labels, truth), "status": "ok",
                    "iterations": sol.diagnostics.get("iterations", 0)}
        except SSLError as exc:
            row |= {"rate": float("nan"), "status": f"{type(exc).__name__}: {exc}", "iterations": -1}
        return row

    return HeatmapTable(_map(run, cells, threads))


@dataclass(frozen=True)
class SuccessEstimate:
    success_count: int
    trials: int

    @property
    def estimate(self) -> float:
        return self.success_count / self.trials

    @property
    def stderr(self) -> float:
        p = self.estimate
        return math.sqrt(max(p * (1 - p), 0.0) / self.trials)


def success_probability(cell: Cell, data: MixtureData, trials: int, seed: int, *,
                        method: str = "probit", gamma: float = 0.5, family: str = "logistic",
                        rank: int | None = 10, label_counts=(1, 1, 1), radius: float = 0.25,
                        tail_width: float | None = None, cache: SpectralCache | None = None,
                        threads: int = 1) -> SuccessEstimate:
    """Fraction of trials in which every node is labelled correctly.

    Each trial redraws the observed labels from the noise model applied to
    the ground-truth latent, using the stream (seed, trial, node).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    labelled = place_labels(data, label_counts)
    noise = NoiseModel(family, gamma)
    cache = cache or SpectralCache(data, radius, tail_width=tail_width)
    cov = cache.covariance(cell.eps, cell.tau2, cell.alpha)
    if method == "probit":
        latent, truth = data.binary_latent(), data.binary_truth
    else:
        latent, truth = data.onehot_latent(), data.clusters

    def run(t: int) -> bool:
        if method == "probit":
            labels = sample_binary_labels(latent, labelled, noise, seed, t)
        else:
            labels = sample_multiclass_labels(latent, labelled, noise, seed, t)
        try:
            sol = solve_cell(method, cov, labels, noise, rank)
        except SSLError:
            return False
        return bool(np.array_equal(sol.predicted_labels, truth))

    wins = _map(run, range(trials), threads)
    return SuccessEstimate(int(sum(wins)), trials)


def success_grid(grid: SweepGrid, data: MixtureData, trials: int, seed: int, *,
                 threads: int = 1, cache: SpectralCache | None = None) -> HeatmapTable:
    """Success probability for each grid cell."""
    cache = cache or SpectralCache(data, grid.radius, tail_width=grid.tail_width)
    table = HeatmapTable(header=("alpha", "eps_over_tau2", "tau2", "success", "stderr"))
    for cell in grid.cells():
        est = success_probability(cell, data, trials, seed, method=grid.method, gamma=grid.gamma,
                                  family=grid.family, rank=grid.rank,
                                  label_counts=grid.label_counts, radius=grid.radius,
                                  cache=cache, threads=threads)
        table.rows.append({"alpha": cell.alpha, "eps_over_tau2": cell.eps_over_tau2,
                           "tau2": cell.tau2, "success": est.estimate, "stderr": est.stderr})
    return table


def spectral_sweep(eps_values, tau_values, alpha: float, data: MixtureData, *,
                   radius: float = 0.25, tail_width: float | None = None) -> list[dict]:
    """Low-lying spectrum of the covariance for each (eps, tau) pair.

    ``lambda_k_minus_1`` is computed without cancellation. The projection
    residuals measure how far the 2nd and 3rd eigenvectors are from the
    span of the unperturbed cluster indicators.
    """
    cache = SpectralCache(data, radius, tail_width=tail_width)
    chi = cache.indicators()
    rows = []
    for eps in eps_values:
        for tau in tau_values:
            cov = cache.covariance(eps, tau * tau, alpha)
            lam = cov.inv_eigenvalues
            lm1 = cov.inv_eigenvalues_minus_one()
            V = cov.vectors
            rows.append({
                "eps": float(eps), "tau2": float(tau * tau), "alpha": float(alpha),
                "lambda2": float(lam[1]), "lambda3": float(lam[2]), "lambda4": float(lam[3]),
                "lambda2_minus_1": float(lm1[1]), "lambda3_minus_1": float(lm1[2]),
                "proj_residual2": projection_residual(V[:, 1], chi),
                "proj_residual3": projection_residual(V[:, 2], chi),
            })
    return rows


def balance_study(label_counts, grid: SweepGrid, data: MixtureData, *, trials: int | None = None,
                  seed: int = 0, threads: int = 1,
                  cache: SpectralCache | None = None) -> HeatmapTable:
    """Accuracy (or, with ``trials``, success probability) with a given number
    of labelled nodes per cluster."""
    g = replace(grid, label_counts=tuple(int(c) for c in label_counts))
    if trials is None:
        return sweep_accuracy(g, data, threads=threads, cache=cache)
    return success_grid(g, data, trials, seed, threads=threads, cache=cache)


def transition_point(table: HeatmapTable, alpha: float, threshold: float = 0.25):
    """Smallest eps/tau^2 along the alpha row whose rate exceeds ``threshold``,
    or None when the row never does."""
    row = sorted(table.row_for_alpha(alpha), key=lambda r: r["eps_over_tau2"])
    for r in row:
        if r["rate"] > threshold:
            return r["eps_over_tau2"]
    return None
