"""Plain-text input and output: CSV tables and JSON documents.

CSV files are comma separated with a header row and LF line endings.
Floats are written with ``repr`` (shortest round-trip form), so identical
results always give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .experiments import HeatmapTable, MixtureData
from .graph import PointCloud, WeightedGraph

__all__ = ["fmt", "write_csv", "read_csv", "write_json", "read_json", "write_points",
           "read_points", "write_truth", "read_truth", "load_mixture", "write_labels",
           "read_labels", "write_weights", "write_table"]


def fmt(x) -> str:
    """Deterministic text form of a cell value."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV file")
    return rows[0], rows[1:]


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default, allow_nan=True)
        fh.write("\n")
    return path


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


# -- datasets ---------------------------------------------------------------------

def write_points(path, cloud: PointCloud) -> Path:
    header = [f"x{k}" for k in range(cloud.dim)]
    return write_csv(path, header, cloud.points.tolist())


def read_points(path) -> PointCloud:
    header, rows = read_csv(path)
    pts = np.array([[float(v) for v in r] for r in rows], dtype=float)
    if pts.size == 0:
        raise ValueError(f"{path}: no points")
    if pts.shape[1] != len(header):
        raise ValueError(f"{path}: row width does not match header")
    return PointCloud(pts)


def write_truth(path, data: MixtureData) -> Path:
    rows = zip(range(data.n), data.clusters.tolist(), data.binary_truth.tolist())
    return write_csv(path, ["node_index", "cluster", "binary_label"], rows)


def read_truth(path) -> tuple[np.ndarray, np.ndarray]:
    header, rows = read_csv(path)
    if header != ["node_index", "cluster", "binary_label"]:
        raise ValueError(f"{path}: unexpected header {header}")
    arr = np.array([[int(v) for v in r] for r in rows], dtype=int)
    if not np.array_equal(arr[:, 0], np.arange(arr.shape[0])):
        raise ValueError(f"{path}: node indices must be 0..N-1 in order")
    return arr[:, 1], arr[:, 2]


def load_mixture(points_path, truth_path) -> MixtureData:
    cloud = read_points(points_path)
    clusters, binary = read_truth(truth_path)
    if clusters.size != cloud.n:
        raise ValueError("points and truth files have different lengths")
    return MixtureData(cloud, clusters, binary, None)


# -- labels, graphs, tables --------------------------------------------------------

def write_labels(path, indices, values) -> Path:
    return write_csv(path, ["node_index", "label"], zip(np.asarray(indices).tolist(),
                                                      np.asarray(values).tolist()))


def read_labels(path) -> tuple[np.ndarray, np.ndarray]:
    header, rows = read_csv(path)
    if header != ["node_index", "label"]:
        raise ValueError(f"{path}: expected header node_index,label")
    arr = np.array([[int(v) for v in r] for r in rows], dtype=int).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def write_weights(path, graph: WeightedGraph) -> Path:
    """Upper-triangle edge list ``i, j, w`` of the nonzero weights."""
    W = graph.weights
    i, j = np.nonzero(np.triu(W, 1))
    return write_csv(path, ["i", "j", "weight"], zip(i.tolist(), j.tolist(), W[i, j].tolist()))


def write_table(path, table: HeatmapTable, columns) -> Path:
    return write_csv(path, list(columns), ([r[c] for c in columns] for r in table.rows))
