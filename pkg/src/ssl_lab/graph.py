"""Proximity graphs, graph Laplacians and cluster structure.

Node indices and component ids are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components as _cc
from scipy.spatial.distance import pdist, squareform

from .errors import OutlierNode, ParameterError

__all__ = [
    "PointCloud", "HardThreshold", "PerturbedThreshold", "Exponential",
    "WeightedGraph", "GraphLaplacian", "ClusterPartition",
    "kernel_eval", "build_weight_matrix", "build_laplacian",
    "connected_components", "weighted_indicators",
]


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must be an N x d array with N, d >= 1, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


# -- kernels -----------------------------------------------------------------

@dataclass(frozen=True)
class HardThreshold:
    """Indicator kernel ``1{t <= radius}``."""
    radius: float = 0.25

    def __post_init__(self):
        if not self.radius > 0:
            raise ParameterError("radius must be positive")

    def __call__(self, t):
        return (np.asarray(t) <= self.radius).astype(float)


@dataclass(frozen=True)
class PerturbedThreshold:
    """Indicator kernel plus a Gaussian tail of height ``epsilon``.

    Every pair of points gets a weight of at least order ``epsilon``, so for
    ``epsilon > 0`` the graph is complete while edges between well separated
    clusters stay O(epsilon). The tail width is ``radius + epsilon`` unless
    ``tail_width`` overrides it.
    """
    radius: float = 0.25
    epsilon: float = 0.0
    tail_width: float | None = None

    def __post_init__(self):
        if not self.radius > 0:
            raise ParameterError("radius must be positive")
        if not self.epsilon >= 0:
            raise ParameterError("epsilon must be nonnegative")
        if self.tail_width is not None and not self.tail_width > 0:
            raise ParameterError("tail_width must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        base = (t <= self.radius).astype(float)
        if self.epsilon == 0:
            return base
        width = self.radius + self.epsilon if self.tail_width is None else self.tail_width
        return base + self.epsilon * np.exp(-t**2 / width**2)


@dataclass(frozen=True)
class Exponential:
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ParameterError("scale must be positive")

    def __call__(self, t):
        return np.exp(-np.asarray(t, dtype=float) / self.scale)


KernelSpec = HardThreshold | PerturbedThreshold | Exponential


def kernel_eval(spec, t):
    """Evaluate a kernel at distance(s) ``t >= 0``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(np.isnan(t_arr)):
        raise ValueError("kernel argument must be a nonnegative distance")
    out = spec(t_arr)
    return float(out) if out.ndim == 0 else out


# -- graphs ------------------------------------------------------------------

@dataclass(frozen=True)
class WeightedGraph:
    weights: np.ndarray
    degrees: np.ndarray = field(default=None)

    def __post_init__(self):
        W = np.array(self.weights, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("weight matrix must be square")
        if not np.array_equal(W, W.T):
            raise ValueError("weight matrix must be symmetric")
        if np.any(W < 0):
            raise ValueError("weights must be nonnegative")
        if np.any(np.diag(W) != 0):
            raise ValueError("weight matrix must have a zero diagonal")
        W.setflags(write=False)
        d = W.sum(axis=1)
        d.setflags(write=False)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "degrees", d)

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def build_weight_matrix(cloud: PointCloud, spec) -> WeightedGraph:
    """Dense weights ``w_ij = kernel(|x_i - x_j|)`` with a zero diagonal.

    Distances come from the condensed form, so W is bit-exactly symmetric.
    """
    if cloud.n == 1:
        return WeightedGraph(np.zeros((1, 1)))
    w = spec(pdist(cloud.points, metric="euclidean"))
    W = squareform(np.asarray(w, dtype=float), checks=False)
    return WeightedGraph(W)


@dataclass(frozen=True)
class GraphLaplacian:
    matrix: np.ndarray
    p: float
    degrees: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def null_vector(self) -> np.ndarray:
        """``D^p 1``, annihilated by the Laplacian."""
        return self.degrees ** self.p


def build_laplacian(graph: WeightedGraph, p: float = 0.0, q: float | None = None) -> GraphLaplacian:
    """Return ``L = D^{-p} (D - W) D^{-p}``.

    Only the symmetric normalization ``q == p`` is supported.
    """
    if q is not None and q != p:
        raise ParameterError("only symmetric normalizations (q == p) are supported")
    d = graph.degrees
    bad = np.flatnonzero(d <= 0)
    if bad.size:
        raise OutlierNode(bad)
    L = np.diag(d) - graph.weights
    if p != 0:
        s = d ** (-p)
        L = L * s[:, None] * s[None, :]
        L = 0.5 * (L + L.T)
    L.setflags(write=False)
    return GraphLaplacian(matrix=L, p=float(p), degrees=d.copy())


@dataclass(frozen=True)
class ClusterPartition:
    assignment: np.ndarray
    n_components: int
    members: tuple

    @property
    def K(self) -> int:
        return self.n_components


def connected_components(graph: WeightedGraph, threshold: float = 0.0) -> ClusterPartition:
    """Connected components of the relation ``w_ij > threshold``.

    Components are numbered in order of their smallest member.
    """
    if threshold < 0:
        raise ParameterError("threshold must be nonnegative")
    adj = graph.weights > threshold
    k, raw = _cc(adj, directed=False)
    # relabel by first occurrence so numbering does not depend on scipy internals
    _, first = np.unique(raw, return_index=True)
    order = np.argsort(first)
    remap = np.empty(k, dtype=int)
    remap[order] = np.arange(k)
    assignment = remap[raw]
    members = tuple(np.flatnonzero(assignment == c) for c in range(k))
    assignment.setflags(write=False)
    return ClusterPartition(assignment=assignment, n_components=int(k), members=members)


def weighted_indicators(partition: ClusterPartition, graph: WeightedGraph, p: float = 0.0) -> np.ndarray:
    """Normalized weighted cluster indicators, one per row (K x N).

    Row k holds ``d_j^p`` on the members of cluster k and zero elsewhere,
    scaled to unit norm.
    """
    if partition.assignment.shape[0] != graph.n:
        raise ValueError("partition and graph sizes differ")
    d = graph.degrees
    out = np.zeros((partition.K, graph.n))
    for k, idx in enumerate(partition.members):
        v = d[idx] ** p if p != 0 else np.ones(idx.size)
        out[k, idx] = v / np.linalg.norm(v)
    return out
