"""Run configuration for the command-line tool.

A config is a JSON object with one section per concern::

    {
      "dataset":  {"per_cluster": [50, 50, 50], "variance": 0.01},
      "kernel":   {"radius": 0.25, "p": 0.0},
      "noise":    {"family": "logistic", "gamma": 0.5},
      "cell":     {"alpha": 2.0, "eps_over_tau2": 0.01, "tau": 0.1},
      "solver":   {"method": "truncated", "rank": 10},
      "labels":   {"counts": [1, 1, 1], "mode": "exact"},
      "grid":     {"alpha_values": [...], "eps_over_tau2_values": [...]},
      "study":    {"trials": 100},
      "spectrum": {"eps_values": [...], "tau_values": [0.1], "alpha": 1.0}
    }

Every key is optional. ``--set section.key=value`` overrides are applied
after the file; values are parsed as JSON when possible and kept as strings
otherwise.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields

from .experiments import SweepGrid, SyntheticSpec
from .likelihood import NoiseModel

__all__ = ["ConfigError", "DatasetConfig", "KernelConfig", "CellConfig", "SolverConfig",
           "LabelConfig", "StudyConfig", "SpectrumConfig", "RunConfig", "apply_override",
           "parse_overrides"]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _build(cls, section: str, raw):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section {section!r} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {section!r}: {', '.join(unknown)}")
    kw = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()}
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section!r} section: {exc}") from exc


@dataclass(frozen=True)
class DatasetConfig:
    """Synthetic mixture settings, or paths to ``points.csv``/``truth.csv``."""
    centers: tuple = SyntheticSpec.centers
    per_cluster: tuple = SyntheticSpec.per_cluster
    variance: float = SyntheticSpec.variance
    binary_classes: tuple = SyntheticSpec.binary_classes
    require_clustered: bool = True
    points: str | None = None
    truth: str | None = None

    def __post_init__(self):
        if (self.points is None) != (self.truth is None):
            raise ValueError("points and truth files must be given together")
        centers = tuple(tuple(float(x) for x in c) for c in self.centers)
        object.__setattr__(self, "centers", centers)

    def synthetic_spec(self, seed: int) -> SyntheticSpec:
        return SyntheticSpec(self.centers, tuple(int(c) for c in self.per_cluster),
                             float(self.variance), int(seed),
                             tuple(int(c) for c in self.binary_classes))


@dataclass(frozen=True)
class KernelConfig:
    radius: float = 0.25
    p: float = 0.0
    tail_width: float | None = None

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.tail_width is not None and not self.tail_width > 0:
            raise ValueError("tail_width must be positive")


@dataclass(frozen=True)
class CellConfig:
    alpha: float = 2.0
    eps_over_tau2: float = 0.01
    tau: float = 0.1

    def __post_init__(self):
        if min(self.alpha, self.eps_over_tau2, self.tau) < 0 or self.alpha == 0 or self.tau == 0:
            raise ValueError("alpha and tau must be positive, eps_over_tau2 nonnegative")


@dataclass(frozen=True)
class SolverConfig:
    """``method`` is one of truncated, reduced, full; ``rank`` applies to truncated."""
    method: str = "truncated"
    rank: int = 10
    tol: float = 1e-10
    max_iter: int = 100

    def __post_init__(self):
        if self.method not in ("truncated", "reduced", "full"):
            raise ValueError("solver.method must be truncated, reduced or full")
        if self.rank < 1 or self.max_iter < 1 or not self.tol > 0:
            raise ValueError("rank and max_iter must be positive, tol > 0")


@dataclass(frozen=True)
class LabelConfig:
    """How labelled nodes get their labels.

    ``mode="exact"`` copies the ground truth, ``"sampled"`` draws them from
    the noise model (stream ``(seed, trial, node)``), ``"file"`` reads a
    ``node_index,label`` CSV.
    """
    counts: tuple = (1, 1, 1)
    mode: str = "exact"
    trial: int = 0
    file: str | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "sampled", "file"):
            raise ValueError("labels.mode must be exact, sampled or file")
        if self.mode == "file" and not self.file:
            raise ValueError("labels.mode=file needs labels.file")


@dataclass(frozen=True)
class StudyConfig:
    trials: int = 100
    label_counts: tuple = (1, 1, 1)
    success: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")


@dataclass(frozen=True)
class SpectrumConfig:
    eps_values: tuple = (0.0, 1e-5, 1e-4, 1e-3)
    tau_values: tuple = (0.1,)
    alpha: float = 1.0
    n_eigs: int = 6

    def __post_init__(self):
        if not self.eps_values or not self.tau_values:
            raise ValueError("eps_values and tau_values must be nonempty")
        if min(self.eps_values) < 0 or min(self.tau_values) <= 0 or not self.alpha > 0:
            raise ValueError("spectrum values out of range")
        if self.n_eigs < 1:
            raise ValueError("n_eigs must be positive")


_SECTIONS = {"dataset": DatasetConfig, "kernel": KernelConfig, "cell": CellConfig,
             "solver": SolverConfig, "labels": LabelConfig, "study": StudyConfig,
             "spectrum": SpectrumConfig}


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    noise: NoiseModel = field(default_factory=lambda: NoiseModel("logistic", 0.5))
    cell: CellConfig = field(default_factory=CellConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    labels: LabelConfig = field(default_factory=LabelConfig)
    grid: SweepGrid = field(default_factory=SweepGrid)
    study: StudyConfig = field(default_factory=StudyConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)

    @classmethod
    def from_mapping(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = set(_SECTIONS) | {"noise", "grid"}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config section(s): {', '.join(unknown)}")
        kw = {name: _build(c, name, raw.get(name)) for name, c in _SECTIONS.items()}
        kw["noise"] = _build(NoiseModel, "noise", {"gamma": 0.5, **(raw.get("noise") or {})})
        grid_raw = raw.get("grid") or {}
        if not isinstance(grid_raw, dict):
            raise ConfigError("section 'grid' must be an object")
        try:
            kw["grid"] = SweepGrid.from_dict(grid_raw)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid 'grid' section: {exc}") from exc
        return cls(**kw)

    def to_dict(self) -> dict:
        out = {name: asdict(getattr(self, name)) for name in _SECTIONS}
        out["noise"] = self.noise.to_dict()
        out["grid"] = self.grid.to_dict()
        return json.loads(json.dumps(out))


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_overrides(items) -> list[tuple[str, object]]:
    out = []
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key or "." not in key:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        out.append((key, _parse_value(value)))
    return out


def apply_override(raw: dict, key: str, value) -> dict:
    """Return a copy of ``raw`` with the dotted ``key`` set to ``value``."""
    raw = copy.deepcopy(raw)
    parts = key.split(".")
    node = raw
    for p in parts[:-1]:
        child = node.setdefault(p, {})
        if not isinstance(child, dict):
            raise ConfigError(f"override {key!r}: {p!r} is not a section")
        node = child
    node[parts[-1]] = value
    return raw
