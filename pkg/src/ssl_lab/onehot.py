"""Minimizers of the one-hot functional ``½<C^{-1}, U^T U>_F - Σ log Ψ̆(u_j; y_j)``.

The latent is an M x N matrix whose columns are per-node class scores.
Vectors over (class, labelled node) pairs are flattened column by column:
entry ``i*M + m`` belongs to labelled node ``i`` and class ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import SizeError
from .likelihood import MultiLabels, NoiseModel, QuadratureRule, classify_argmax, onehot_terms
from .newton import damped_newton
from .probit import factor_submatrix
from .spectral import CovarianceOperator, TruncatedCovariance, truncate

__all__ = ["OneHotProblem", "OneHotSolution", "solve_reduced", "solve_full",
           "solve_truncated", "reconstruct_onehot", "reduced_objective",
           "reduced_gradient", "el_residual", "likelihood_part"]

FULL_SIZE_CAP = 10_000


@dataclass(frozen=True, eq=False)
class OneHotProblem:
    covariance: CovarianceOperator | TruncatedCovariance
    labels: MultiLabels
    noise: NoiseModel
    quadrature: QuadratureRule | None = None

    def __post_init__(self):
        if len(self.labels) and self.labels.indices.max() >= self.covariance.n:
            raise IndexError("label index outside the graph")
        if self.quadrature is None:
            object.__setattr__(self, "quadrature", QuadratureRule.for_family(self.noise.family))

    @property
    def M(self) -> int:
        return self.labels.n_classes


@dataclass(eq=False)
class OneHotSolution:
    U_star: np.ndarray
    B_star: np.ndarray
    coefficients: np.ndarray
    labelled: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def predicted_labels(self) -> np.ndarray:
        return classify_argmax(self.U_star)

    def to_dict(self) -> dict:
        return {"U_star": self.U_star.tolist(), "B_star": self.B_star.tolist(),
                "coefficients": self.coefficients.tolist(),
                "labelled": self.labelled.tolist(),
                "labels": self.predicted_labels.tolist(),
                "diagnostics": self.diagnostics}


_FLOOR = np.log(1e-300)


def _loglik(problem, V):
    """Sum of floored ``log Ψ̆`` terms, gradient columns and Hessian blocks."""
    logpsi, g, H = onehot_terms(problem.noise, V, problem.labels.values,
                                problem.quadrature, hessian=True)
    floored = logpsi < _FLOOR
    return float(np.maximum(logpsi, _FLOOR).sum()), g, H, int(floored.sum())


def likelihood_part(problem: OneHotProblem, B) -> float:
    """``-Σ log Ψ̆(b_i; y_i)`` for labelled columns ``B`` (M x J)."""
    logpsi, _, _ = onehot_terms(problem.noise, B, problem.labels.values, problem.quadrature)
    return float(-np.maximum(logpsi, _FLOOR).sum())


def _vec(X):
    return X.T.ravel()


def _unvec(x, M):
    return x.reshape(-1, M).T


def reduced_objective(problem: OneHotProblem, B, cho=None) -> float:
    idx = problem.labels.indices
    if cho is None:
        cho = factor_submatrix(problem.covariance.submatrix(idx))
    B = np.asarray(B, dtype=float)
    X = sla.cho_solve(cho, B.T)
    return 0.5 * float(np.sum(B.T * X)) + likelihood_part(problem, B)


def reduced_gradient(problem: OneHotProblem, B, cho=None) -> np.ndarray:
    idx = problem.labels.indices
    if cho is None:
        cho = factor_submatrix(problem.covariance.submatrix(idx))
    B = np.asarray(B, dtype=float)
    _, g, _ = onehot_terms(problem.noise, B, problem.labels.values, problem.quadrature)
    return sla.cho_solve(cho, B.T).T - g


def reconstruct_onehot(B_star, cov, labelled) -> np.ndarray:
    """``U = Σ_j b̆_j c_j^T`` with ``b̆`` the columns of ``B (C')^{-1}``."""
    labelled = np.asarray(labelled, dtype=int)
    B_star = np.asarray(B_star, dtype=float)
    if labelled.size == 0:
        raise ValueError("no labelled nodes")
    cho = factor_submatrix(cov.submatrix(labelled))
    A = sla.cho_solve(cho, B_star.T).T
    return A @ cov.columns(labelled).T


def _blockdiag(H):
    return sla.block_diag(*H) if len(H) else np.zeros((0, 0))


def solve_reduced(problem: OneHotProblem, *, tol=1e-10, max_iter=100) -> OneHotSolution:
    """Newton on the M x J matrix of labelled scores.

    A truncated covariance is handed to :func:`solve_truncated`, which works
    on column coefficients and tolerates a singular labelled block.
    """
    if isinstance(problem.covariance, TruncatedCovariance):
        return solve_truncated(problem, tol=tol, max_iter=max_iter)
    idx = problem.labels.indices
    if idx.size == 0:
        raise ValueError("reduced solve needs at least one label")
    cov = problem.covariance
    M, J = problem.M, idx.size
    Cp = cov.submatrix(idx)
    cho = factor_submatrix(Cp)
    KC = np.kron(Cp, np.eye(M))
    floor_hits = [0]

    def value(x):
        B = _unvec(x, M)
        X = sla.cho_solve(cho, B.T)
        return 0.5 * float(np.sum(B.T * X)) + likelihood_part(problem, B)

    def model(x):
        B = _unvec(x, M)
        ll, G, H, hits = _loglik(problem, B)
        floor_hits[0] += hits
        g = _vec(sla.cho_solve(cho, B.T).T - G)
        # (C'^{-1} ⊗ I + blockdiag(-H)) step = -g, multiplied through by C' ⊗ I
        rhs = -(x - _vec(G @ Cp))
        step = np.linalg.solve(np.eye(M * J) + KC @ _blockdiag(-H), rhs)
        return g, step, float(np.linalg.norm(g))

    res = damped_newton(value, model, np.zeros(M * J), tol=tol, max_iter=max_iter,
                        what="one-hot reduced solve")
    B = _unvec(res.x, M)
    A = sla.cho_solve(cho, B.T).T
    U = A @ cov.columns(idx).T
    diag = res.diagnostics() | {"method": "reduced", "floor_hits": floor_hits[0]}
    return OneHotSolution(U, B, A, idx, diag)


def solve_truncated(problem: OneHotProblem, n: int | None = None, *, tol=1e-10,
                    max_iter=100) -> OneHotSolution:
    """Fixed point ``a_j = f_j(Σ_k Ĉ_jk a_k)`` for a rank-n covariance.

    Same construction as the probit truncated solve: Newton on the
    coefficient residual ``A - f(A Ĉ')``, globalized with the convex merit
    ``½ tr(A Ĉ' A^T) - Σ log Ψ̆``.
    """
    cov = problem.covariance
    if n is not None:
        if isinstance(cov, TruncatedCovariance):
            cov = cov.source
        cov = truncate(cov, n)
    elif not isinstance(cov, TruncatedCovariance):
        raise ValueError("pass a truncation rank or a TruncatedCovariance")
    idx = problem.labels.indices
    M, J = problem.M, idx.size
    if J == 0:
        return OneHotSolution(np.zeros((M, cov.n)), np.zeros((M, 0)), np.zeros((M, 0)), idx,
                              {"iterations": 0, "final_grad_norm": 0.0, "objective": 0.0,
                               "method": "truncated", "rank": cov.rank})
    Cp = cov.submatrix(idx)
    KC = np.kron(Cp, np.eye(M))
    floor_hits = [0]

    def value(x):
        A = _unvec(x, M)
        B = A @ Cp
        return 0.5 * float(np.sum(A * B)) + likelihood_part(problem, B)

    def model(x):
        A = _unvec(x, M)
        B = A @ Cp
        _, G, H, hits = _loglik(problem, B)
        floor_hits[0] += hits
        r = x - _vec(G)
        Hb = _blockdiag(-H)
        step = np.linalg.solve(np.eye(M * J) + Hb @ KC, -r)
        g = KC @ r
        # as in the probit solve: x -> vec(G(A Ĉ')) removes the part of r
        # that a singular Ĉ' hides from the merit
        return g, step, float(min(np.linalg.norm(r), np.linalg.norm(Hb, 2) * np.linalg.norm(g)))

    def fixed_point_residual(x):
        _, G, _, _ = _loglik(problem, _unvec(x, M) @ Cp)
        return x - _vec(G), _vec(G)

    res = damped_newton(value, model, np.zeros(M * J), tol=tol, max_iter=max_iter,
                        what="one-hot truncated solve")
    x = res.x
    r, proj = fixed_point_residual(x)
    if np.linalg.norm(r) > res.residual:
        x = proj
        r, _ = fixed_point_residual(x)
    A = _unvec(x, M)
    U = A @ cov.columns(idx).T
    diag = res.diagnostics() | {"method": "truncated", "rank": cov.rank,
                                "floor_hits": floor_hits[0],
                                "final_grad_norm": float(np.linalg.norm(r))}
    return OneHotSolution(U, A @ Cp, A, idx, diag)


def el_residual(problem: OneHotProblem, U) -> float:
    """Norm of ``C^{-1} U^T - Σ_j e_j f_j(u_j)^T`` (fixed-point form for a
    truncated covariance)."""
    U = np.asarray(U, dtype=float)
    cov = problem.covariance
    idx = problem.labels.indices
    if idx.size == 0:
        G = np.zeros((U.shape[0], 0))
    else:
        _, G, _ = onehot_terms(problem.noise, U[:, idx], problem.labels.values, problem.quadrature)
    if isinstance(cov, TruncatedCovariance):
        return float(np.linalg.norm(U - G @ cov.columns(idx).T))
    R = U @ cov.precision
    R[:, idx] -= G
    return float(np.linalg.norm(R))


def solve_full(problem: OneHotProblem, *, tol=1e-10, max_iter=100,
               size_cap: int = FULL_SIZE_CAP) -> OneHotSolution:
    """Newton on all M x N entries; meant for cross-checking :func:`solve_reduced`.

    The Newton system ``(C^{-1} ⊗ I + E^T H E) s = -g`` is reduced to the
    labelled block as in the probit full solve.
    """
    cov = problem.covariance
    if not isinstance(cov, CovarianceOperator):
        raise TypeError("full-space solve needs an untruncated covariance")
    M, N = problem.M, cov.n
    if M * N > size_cap:
        raise SizeError(f"M*N = {M * N} exceeds the full-solve cap {size_cap}")
    idx = problem.labels.indices
    J = idx.size
    if J == 0:
        return OneHotSolution(np.zeros((M, N)), np.zeros((M, 0)), np.zeros((M, 0)), idx,
                              {"iterations": 0, "final_grad_norm": 0.0, "objective": 0.0,
                               "method": "full"})
    P, C = cov.precision, cov.matrix
    Cp = C[np.ix_(idx, idx)]
    KC = np.kron(Cp, np.eye(M))
    floor_hits = [0]

    def value(x):
        U = x.reshape(M, N)
        return 0.5 * float(np.sum((U @ P) * U)) + likelihood_part(problem, U[:, idx])

    def model(x):
        U = x.reshape(M, N)
        _, G, H, hits = _loglik(problem, U[:, idx])
        floor_hits[0] += hits
        Gm = U @ P
        Gm[:, idx] -= G
        CG = Gm @ C                      # (C ⊗ I) g, as an M x N matrix
        Hb = _blockdiag(-H)
        z = np.linalg.solve(np.eye(M * J) + Hb @ KC, -Hb @ _vec(CG[:, idx]))
        step = -CG - _unvec(z, M) @ C[idx]
        return Gm.ravel(), step.ravel(), float(np.linalg.norm(Gm))

    res = damped_newton(value, model, np.zeros(M * N), tol=tol, max_iter=max_iter,
                        what="one-hot full solve")
    U = res.x.reshape(M, N)
    _, G, _ = onehot_terms(problem.noise, U[:, idx], problem.labels.values, problem.quadrature)
    diag = res.diagnostics() | {"method": "full", "floor_hits": floor_hits[0]}
    return OneHotSolution(U, U[:, idx].copy(), G, idx, diag)
