"""Spectral realization of the graph covariance ``tau^{2a} (L + tau^2 I)^{-a}``.

Everything is built from one dense symmetric eigendecomposition of the
Laplacian, so fractional powers are exact and columns, labelled
submatrices and rank truncations are cheap to form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ContractViolation, ParameterError
from .graph import GraphLaplacian

__all__ = [
    "EigenDecomposition", "CovarianceOperator", "TruncatedCovariance",
    "SpectralReport", "eigendecompose", "covariance_from", "covariance_column",
    "covariance_submatrix", "truncate", "projection_residual", "spectral_report",
]


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray   # ascending
    eigenvectors: np.ndarray  # columns
    norm: float               # spectral norm of the source matrix

    @property
    def n(self) -> int:
        return self.eigenvalues.size


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # first entry that is not roundoff-small gets a positive sign
    tol = 1e-10 * np.abs(vecs).max(axis=0)
    first = np.argmax(np.abs(vecs) > tol, axis=0)
    signs = np.sign(vecs[first, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def eigendecompose(lap: GraphLaplacian | np.ndarray) -> EigenDecomposition:
    """Full symmetric eigendecomposition; negative roundoff eigenvalues clamp to 0."""
    L = lap.matrix if isinstance(lap, GraphLaplacian) else np.asarray(lap, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ContractViolation("matrix must be square")
    scale = np.abs(L).max() if L.size else 0.0
    if not np.allclose(L, L.T, rtol=0, atol=1e-12 * max(scale, 1e-300)):
        raise ContractViolation("matrix must be symmetric")
    sigma, phi = sla.eigh(L)
    norm = float(np.abs(sigma).max()) if sigma.size else 0.0
    sigma = np.where(sigma < 0, 0.0, sigma)
    phi = _fix_signs(phi)
    sigma.setflags(write=False)
    phi.setflags(write=False)
    return EigenDecomposition(sigma, phi, norm)


class _SpectralCovariance:
    """Shared behaviour of full and truncated covariances.

    Subclasses provide ``inv_eigenvalues`` (λ_k, the eigenvalues of the
    inverse covariance) and ``vectors`` with matching columns.
    """

    inv_eigenvalues: np.ndarray
    vectors: np.ndarray

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Dense covariance matrix."""
        return (self.vectors / self.inv_eigenvalues) @ self.vectors.T

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.vectors @ ((self.vectors.T @ x).T / self.inv_eigenvalues).T

    def column(self, j: int) -> np.ndarray:
        if not 0 <= j < self.n:
            raise IndexError(f"node index {j} out of range for N={self.n}")
        return self.vectors @ (self.vectors[j] / self.inv_eigenvalues)

    def columns(self, idx) -> np.ndarray:
        """Covariance columns at ``idx`` as an N x J matrix."""
        idx = np.asarray(idx, dtype=int)
        return self.vectors @ (self.vectors[idx] / self.inv_eigenvalues).T

    def submatrix(self, idx) -> np.ndarray:
        idx = _check_index_list(idx, self.n)
        rows = self.vectors[idx]
        S = (rows / self.inv_eigenvalues) @ rows.T
        return 0.5 * (S + S.T)


@dataclass(frozen=True)
class CovarianceOperator(_SpectralCovariance):
    decomposition: EigenDecomposition
    tau2: float
    alpha: float
    inv_eigenvalues: np.ndarray

    @property
    def vectors(self) -> np.ndarray:
        return self.decomposition.eigenvectors

    @property
    def precision(self) -> np.ndarray:
        """Inverse covariance ``tau^{-2a} (L + tau^2 I)^a``."""
        return (self.vectors * self.inv_eigenvalues) @ self.vectors.T

    def inv_eigenvalues_minus_one(self) -> np.ndarray:
        """``λ_k - 1`` without cancellation for λ_k close to 1."""
        return np.expm1(self.alpha * np.log1p(self.decomposition.eigenvalues / self.tau2))


@dataclass(frozen=True)
class TruncatedCovariance(_SpectralCovariance):
    rank: int
    inv_eigenvalues: np.ndarray
    vectors: np.ndarray
    source: CovarianceOperator


def covariance_from(decomp: EigenDecomposition, tau2: float, alpha: float) -> CovarianceOperator:
    if not tau2 > 0:
        raise ParameterError("tau2 must be positive")
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    lam = ((decomp.eigenvalues + tau2) / tau2) ** alpha
    lam.setflags(write=False)
    return CovarianceOperator(decomp, float(tau2), float(alpha), lam)


def covariance_column(cov, j: int) -> np.ndarray:
    return cov.column(j)


def _check_index_list(idx, n) -> np.ndarray:
    idx = np.asarray(idx, dtype=int).ravel()
    if idx.size == 0:
        raise ValueError("index list must be nonempty")
    if np.unique(idx).size != idx.size:
        raise ValueError("index list has duplicates")
    if idx.min() < 0 or idx.max() >= n:
        raise IndexError("index out of range")
    return idx


def covariance_submatrix(cov, labelled) -> np.ndarray:
    """Rows and columns of the covariance at the labelled nodes, in the given order."""
    return cov.submatrix(labelled)


def truncate(cov: CovarianceOperator, n: int) -> TruncatedCovariance:
    """Keep the ``n`` largest-variance eigenpairs (smallest λ)."""
    if not 1 <= n <= cov.n:
        raise ValueError(f"truncation rank must lie in [1, {cov.n}]")
    lam = cov.inv_eigenvalues[:n].copy()
    vecs = cov.vectors[:, :n].copy()
    lam.setflags(write=False)
    vecs.setflags(write=False)
    return TruncatedCovariance(rank=int(n), inv_eigenvalues=lam, vectors=vecs, source=cov)


def projection_residual(v: np.ndarray, basis) -> float:
    """Norm of the part of ``v`` orthogonal to span(basis).

    ``basis`` is a sequence of orthonormal vectors (or a K x N array).
    """
    v = np.asarray(v, dtype=float)
    B = np.atleast_2d(np.asarray(basis, dtype=float))
    if B.size == 0:
        return float(np.linalg.norm(v))
    G = B @ B.T
    if not np.allclose(G, np.eye(B.shape[0]), rtol=0, atol=1e-10):
        raise ContractViolation("basis is not orthonormal")
    r = v - B.T @ (B @ v)
    return float(np.linalg.norm(r))


@dataclass(frozen=True)
class SpectralReport:
    lambda_K: float
    lambda_K_plus_1: float
    gap: float
    sigma: np.ndarray
    lam: np.ndarray


def spectral_report(cov: CovarianceOperator, K: int) -> SpectralReport:
    if not 1 <= K < cov.n:
        raise ValueError("K must satisfy 1 <= K < N")
    lam = cov.inv_eigenvalues
    return SpectralReport(
        lambda_K=float(lam[K - 1]),
        lambda_K_plus_1=float(lam[K]),
        gap=float(lam[K] - lam[K - 1]),
        sigma=np.array(cov.decomposition.eigenvalues),
        lam=np.array(lam),
    )
