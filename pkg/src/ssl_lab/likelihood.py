"""Noise models, probit and one-hot likelihood terms, label samplers, classifiers.

Class labels for the multi-class model are 0-based (``0 .. M-1``); binary
labels are ``-1``/``+1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfcx, expit, log_expit, log_ndtr, logit, logsumexp, ndtr, ndtri

from .errors import ParameterError

__all__ = [
    "NoiseModel", "BinaryLabels", "MultiLabels", "QuadratureRule",
    "pdf", "cdf", "probit_F", "probit_F_prime", "probit_potential",
    "onehot_psi_breve", "onehot_log_psi_breve", "onehot_psi_breve_grad",
    "onehot_terms", "sample_binary_labels", "sample_multiclass_labels",
    "classify_sign", "classify_argmax",
]

_LOG_SQRT_2PI = 0.5 * np.log(2 * np.pi)
FAMILIES = ("logistic", "gaussian")


# -- standardized (unit scale) densities ---------------------------------------

def _log_pdf1(family, z):
    if family == "logistic":
        return log_expit(z) + log_expit(-z)
    return -0.5 * z * z - _LOG_SQRT_2PI


def _log_cdf1(family, z):
    return log_expit(z) if family == "logistic" else log_ndtr(z)


def _cdf1(family, z):
    return expit(z) if family == "logistic" else ndtr(z)


def _ppf1(family, u):
    return logit(u) if family == "logistic" else ndtri(u)


def _hazard1(family, z):
    """psi/Psi at unit scale, stable in both tails."""
    if family == "logistic":
        return expit(-z)
    # phi/Phi = sqrt(2/pi) / erfcx(-z/sqrt(2)) keeps full precision in the
    # lower tail, where log_pdf - log_ndtr cancels
    z = np.asarray(z, dtype=float)
    return np.sqrt(2 / np.pi) / erfcx(-z / np.sqrt(2))


def _hazard1_prime(family, z):
    if family == "logistic":
        return -expit(z) * expit(-z)
    h = _hazard1(family, z)
    return -h * (z + h)


def _score1(family, z):
    """d/dz log psi at unit scale."""
    if family == "logistic":
        return np.tanh(-0.5 * z)
    return -z


@dataclass(frozen=True)
class NoiseModel:
    """I.i.d. observation noise: a symmetric, log-concave density with scale ``gamma``.

    By default ``gamma`` is the scale parameter of the family (for the
    logistic, ``Psi(t) = 1 / (1 + exp(-t/gamma))``). With
    ``std_normalized=True`` it is the standard deviation instead.
    """
    family: str = "logistic"
    gamma: float = 1.0
    std_normalized: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown noise family {self.family!r}; expected one of {FAMILIES}")
        if not self.gamma > 0:
            raise ParameterError("gamma must be positive")

    @property
    def scale(self) -> float:
        if self.std_normalized and self.family == "logistic":
            return self.gamma * np.sqrt(3.0) / np.pi
        return self.gamma

    def to_dict(self) -> dict:
        return {"family": self.family, "gamma": self.gamma, "std_normalized": self.std_normalized}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        return cls(d.get("family", "logistic"), float(d.get("gamma", 1.0)),
                   bool(d.get("std_normalized", False)))


def pdf(model: NoiseModel, t):
    s = model.scale
    return np.exp(_log_pdf1(model.family, np.asarray(t, dtype=float) / s)) / s


def cdf(model: NoiseModel, t):
    return _cdf1(model.family, np.asarray(t, dtype=float) / model.scale)


# -- probit ------------------------------------------------------------------------

def probit_F(model: NoiseModel, s, y):
    """``y psi(s y) / Psi(s y)``: the likelihood force at a labelled node."""
    y = np.asarray(y, dtype=float)
    return y * _hazard1(model.family, np.asarray(s) * y / model.scale) / model.scale


def probit_F_prime(model: NoiseModel, s, y):
    """Derivative of :func:`probit_F` in ``s``; always negative."""
    y = np.asarray(y, dtype=float)
    return _hazard1_prime(model.family, np.asarray(s) * y / model.scale) / model.scale**2


def probit_potential(model: NoiseModel, u_labelled, y) -> float:
    """``-sum log Psi(u_j y_j)`` over the labelled nodes."""
    z = np.asarray(u_labelled, dtype=float) * np.asarray(y, dtype=float) / model.scale
    return float(-np.sum(_log_cdf1(model.family, z)))


# -- one-hot ------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Rule for integrals against the noise density.

    Integrals ``∫ psi(t) g(t) dt`` are evaluated as ``Σ w_k g(scale * s_k)``.
    The abscissae ``s_k`` form a uniform grid on ``[-T, T]`` in standardized
    units and ``w_k = h psi_1(s_k)``. Under ``u = Psi(t)`` the same rule is a
    positive rule on (0, 1) with nodes :attr:`unit_nodes`. The trapezoid rule
    converges geometrically for these analytic, rapidly decaying integrands,
    independently of ``gamma``.
    """
    family: str
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def node_count(self) -> int:
        return self.nodes.size

    @property
    def unit_nodes(self) -> np.ndarray:
        return _cdf1(self.family, self.nodes)

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)

    @classmethod
    def for_family(cls, family: str, node_count: int = 321) -> "QuadratureRule":
        return _rule(family, int(node_count))


_HALF_WIDTH = {"logistic": 40.0, "gaussian": 37.0}


@lru_cache(maxsize=16)
def _rule(family, node_count):
    if family not in FAMILIES:
        raise ParameterError(f"unknown noise family {family!r}")
    if node_count < 16:
        raise ParameterError("node_count must be at least 16")
    T = _HALF_WIDTH[family]
    s = np.linspace(-T, T, node_count)
    h = s[1] - s[0]
    w = h * np.exp(_log_pdf1(family, s))
    w /= w.sum()
    s.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(family, s, w)


def _default_rule(model, rule):
    if rule is None:
        return QuadratureRule.for_family(model.family)
    if rule.family != model.family:
        raise ParameterError("quadrature rule was built for a different noise family")
    return rule


def onehot_terms(model: NoiseModel, V, classes, rule: QuadratureRule | None = None,
                 hessian: bool = False):
    """Batched ``log Ψ̆`` with its gradient (and optionally Hessian) in ``v``.

    ``V`` is M x J (one column per labelled node) and ``classes`` holds the
    observed class of each column. Returns ``(logpsi, grad, hess)`` with
    shapes (J,), (M, J) and (J, M, M); ``hess`` is None unless requested.
    """
    rule = _default_rule(model, rule)
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    M, J = V.shape
    classes = np.asarray(classes, dtype=int).reshape(J)
    if np.any(classes < 0) or np.any(classes >= M):
        raise ValueError(f"class index out of range for M={M}")
    fam, sc = model.family, model.scale
    cols = np.arange(J)
    d = (V[classes, cols][None, :] - V) / sc                   # (M, J)
    z = rule.nodes[None, None, :] + d[:, :, None]              # (M, J, Q)
    is_m = np.zeros((M, J), dtype=bool)
    is_m[classes, cols] = True
    A = np.where(is_m[:, :, None], 0.0, _log_cdf1(fam, z))
    logprod = A.sum(axis=0)                                    # (J, Q)
    logpsi = logsumexp(logprod + rule.log_weights, axis=1)     # (J,)
    if M == 1:
        return logpsi, np.zeros((1, J)), (np.zeros((J, 1, 1)) if hessian else None)

    what = np.exp(logprod + rule.log_weights - logpsi[:, None])    # (J, Q), rows sum to 1
    haz = np.where(is_m[:, :, None], 0.0, _hazard1(fam, z))        # (M, J, Q)
    gd = np.einsum("jq,mjq->mj", what, haz)                        # d log G / d d_i

    # d_i = (v_m - v_i)/scale  =>  d/dv_a = sum_i R[i, a] d/dd_i
    grad = -gd / sc
    grad[classes, cols] = gd.sum(axis=0) / sc
    if not hessian:
        return logpsi, grad, None

    Hd = np.einsum("jq,ajq,bjq->jab", what, haz, haz)
    diag = np.einsum("jq,mjq->jm", what, haz * np.where(is_m[:, :, None], 0.0, _score1(fam, z)))
    idx = np.arange(M)
    Hd[:, idx, idx] = diag
    Hd -= np.einsum("aj,bj->jab", gd, gd)
    R = np.broadcast_to(-np.eye(M) / sc, (J, M, M)).copy()
    R[cols, :, classes] = 1.0 / sc
    R[cols, classes, :] = 0.0
    hess = np.einsum("jia,jik,jkb->jab", R, Hd, R)
    hess = 0.5 * (hess + np.transpose(hess, (0, 2, 1)))
    return logpsi, grad, hess


def _single(v, m):
    v = np.asarray(v, dtype=float).ravel()
    if not 0 <= m < v.size:
        raise ValueError(f"class {m} out of range for M={v.size}")
    return v[:, None], np.array([m])


def onehot_log_psi_breve(model, v, m, rule=None) -> float:
    V, c = _single(v, m)
    return float(onehot_terms(model, V, c, rule)[0][0])


def onehot_psi_breve(model, v, m, rule=None) -> float:
    """Probability that class ``m`` wins under latent scores ``v`` plus i.i.d. noise."""
    return float(np.exp(onehot_log_psi_breve(model, v, m, rule)))


def onehot_psi_breve_grad(model, v, m, rule=None) -> np.ndarray:
    """Gradient of Ψ̆(v; m) in ``v``; entries sum to zero."""
    V, c = _single(v, m)
    logpsi, g, _ = onehot_terms(model, V, c, rule)
    return np.exp(logpsi[0]) * g[:, 0]


# -- labels and sampling --------------------------------------------------------

def _as_index(idx, n=None):
    idx = np.asarray(idx, dtype=int).ravel()
    if np.unique(idx).size != idx.size:
        raise ValueError("labelled indices must be distinct")
    if idx.size and (idx.min() < 0 or (n is not None and idx.max() >= n)):
        raise IndexError("labelled index out of range")
    return idx


@dataclass(frozen=True, eq=False)
class BinaryLabels:
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = _as_index(self.indices)
        vals = np.asarray(self.values, dtype=int).ravel()
        if vals.shape != idx.shape:
            raise ValueError("indices and values differ in length")
        if not np.all(np.isin(vals, (-1, 1))):
            raise ValueError("binary labels must be -1 or +1")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.indices.size


@dataclass(frozen=True, eq=False)
class MultiLabels:
    indices: np.ndarray
    values: np.ndarray
    n_classes: int

    def __post_init__(self):
        idx = _as_index(self.indices)
        vals = np.asarray(self.values, dtype=int).ravel()
        if vals.shape != idx.shape:
            raise ValueError("indices and values differ in length")
        if self.n_classes < 2:
            raise ValueError("need at least two classes")
        if vals.size and (vals.min() < 0 or vals.max() >= self.n_classes):
            raise ValueError("class label out of range")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.indices.size


def node_rng(seed: int, trial: int, node: int) -> np.random.Generator:
    """Independent stream for one (seed, trial, node) triple."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(trial), int(node)])))


def sample_noise(model: NoiseModel, seed: int, trial: int, node: int, size=None):
    u = node_rng(seed, trial, node).random(size)
    # random() lies in [0, 1); reflect a hard zero away from the CDF pole
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return model.scale * _ppf1(model.family, u)


def sample_binary_labels(u_truth, labelled, model: NoiseModel, seed: int, trial: int = 0) -> BinaryLabels:
    """Observe ``sgn(u_j + eta_j)`` at the labelled nodes (``sgn(0) = +1``)."""
    u_truth = np.asarray(u_truth, dtype=float)
    idx = _as_index(labelled, u_truth.size)
    eta = np.array([sample_noise(model, seed, trial, j) for j in idx])
    return BinaryLabels(idx, classify_sign(u_truth[idx] + eta))


def sample_multiclass_labels(U_truth, labelled, model: NoiseModel, seed: int, trial: int = 0) -> MultiLabels:
    """Observe ``argmax(u_j + eta_j)`` at the labelled nodes."""
    U_truth = np.asarray(U_truth, dtype=float)
    M, N = U_truth.shape
    idx = _as_index(labelled, N)
    vals = [int(np.argmax(U_truth[:, j] + sample_noise(model, seed, trial, j, size=M))) for j in idx]
    return MultiLabels(idx, np.array(vals, dtype=int), M)


def classify_sign(u) -> np.ndarray:
    return np.where(np.asarray(u) >= 0, 1, -1)


def classify_argmax(U) -> np.ndarray:
    """Column-wise argmax; ties go to the smallest index."""
    return np.argmax(np.asarray(U), axis=0)
