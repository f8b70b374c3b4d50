"""Minimizers of the probit functional ``½<u, C^{-1}u> - Σ log Psi(u_j y_j)``.

Three routes reach the same minimizer:

* :func:`solve_full` runs Newton in all N coordinates;
* :func:`solve_reduced` runs Newton on the labelled values ``b = u|_Z'`` with
  the labelled covariance block ``C'`` and rebuilds ``u`` from covariance
  columns;
* :func:`solve_truncated` replaces C by a rank-n spectral truncation and
  solves the fixed point ``a = F(Ĉ' a)`` for the column coefficients. This is
  the stable route when ``C'`` is badly conditioned (small tau, large alpha).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import IllConditioned
from .likelihood import (BinaryLabels, NoiseModel, classify_sign, probit_F,
                         probit_F_prime, probit_potential)
from .newton import damped_newton
from .spectral import CovarianceOperator, TruncatedCovariance, truncate

__all__ = ["ProbitProblem", "ProbitSolution", "solve_full", "solve_reduced",
           "solve_truncated", "reconstruct", "objective", "gradient", "el_residual",
           "reduced_objective", "reduced_gradient", "factor_submatrix"]

# C' with a larger condition number is treated as singular
MAX_CONDITION = 1e13


@dataclass(frozen=True, eq=False)
class ProbitProblem:
    covariance: CovarianceOperator | TruncatedCovariance
    labels: BinaryLabels
    noise: NoiseModel

    def __post_init__(self):
        if len(self.labels) and self.labels.indices.max() >= self.covariance.n:
            raise IndexError("label index outside the graph")

    @property
    def n(self) -> int:
        return self.covariance.n


@dataclass(eq=False)
class ProbitSolution:
    u_star: np.ndarray
    b_star: np.ndarray
    coefficients: np.ndarray
    labelled: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def predicted_labels(self) -> np.ndarray:
        return classify_sign(self.u_star)

    def to_dict(self) -> dict:
        return {"u_star": self.u_star.tolist(), "b_star": self.b_star.tolist(),
                "coefficients": self.coefficients.tolist(),
                "labelled": self.labelled.tolist(),
                "labels": self.predicted_labels.tolist(),
                "diagnostics": self.diagnostics}


# -- full space --------------------------------------------------------------

def objective(problem: ProbitProblem, u) -> float:
    u = np.asarray(u, dtype=float)
    idx, y = problem.labels.indices, problem.labels.values
    P = problem.covariance.precision
    return 0.5 * float(u @ P @ u) + probit_potential(problem.noise, u[idx], y)


def gradient(problem: ProbitProblem, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    idx, y = problem.labels.indices, problem.labels.values
    g = problem.covariance.precision @ u
    g[idx] -= probit_F(problem.noise, u[idx], y)
    return g


def el_residual(problem: ProbitProblem, u) -> float:
    """``|C^{-1} u - Σ F_j(u_j) e_j|``; for a truncated covariance the fixed-point
    residual ``|u - Σ F_j(u_j) Ĉ e_j|`` is returned instead."""
    u = np.asarray(u, dtype=float)
    cov = problem.covariance
    idx, y = problem.labels.indices, problem.labels.values
    if isinstance(cov, TruncatedCovariance):
        return float(np.linalg.norm(u - cov.columns(idx) @ probit_F(problem.noise, u[idx], y)))
    return float(np.linalg.norm(gradient(problem, u)))


def _full_covariance(problem) -> CovarianceOperator:
    if not isinstance(problem.covariance, CovarianceOperator):
        raise TypeError("full-space solve needs an untruncated covariance")
    return problem.covariance


def solve_full(problem: ProbitProblem, *, tol=1e-10, max_iter=100) -> ProbitSolution:
    """Newton on J(u) from u = 0.

    The Newton system ``(C^{-1} + E^T D E) du = -g`` is solved through the
    labelled block: ``du = -C g - C E^T z`` with ``(I + D C') z = -D E C g``.
    """
    cov = _full_covariance(problem)
    idx, y = problem.labels.indices, problem.labels.values
    noise = problem.noise
    N = cov.n
    if idx.size == 0:
        return ProbitSolution(np.zeros(N), np.zeros(0), np.zeros(0), idx,
                              {"iterations": 0, "final_grad_norm": 0.0, "objective": 0.0,
                               "method": "full"})
    P = cov.precision
    C = cov.matrix
    Cp = C[np.ix_(idx, idx)]

    def value(u):
        return 0.5 * float(u @ P @ u) + probit_potential(noise, u[idx], y)

    def model(u):
        g = P @ u
        g[idx] -= probit_F(noise, u[idx], y)
        d = -probit_F_prime(noise, u[idx], y)
        Cg = C @ g
        z = np.linalg.solve(np.eye(idx.size) + d[:, None] * Cp, -d * Cg[idx])
        step = -Cg - C[:, idx] @ z
        return g, step, float(np.linalg.norm(g))

    res = damped_newton(value, model, np.zeros(N), tol=tol, max_iter=max_iter,
                        what="probit full solve")
    u = res.x
    diag = res.diagnostics() | {"method": "full"}
    return ProbitSolution(u, u[idx].copy(), probit_F(noise, u[idx], y), idx, diag)


# -- reduced -----------------------------------------------------------------

def factor_submatrix(Cp: np.ndarray):
    """Cholesky factor of the labelled block; raises IllConditioned if it is
    numerically singular."""
    ev = np.linalg.eigvalsh(Cp)
    if ev[0] <= 0 or ev[-1] / ev[0] > MAX_CONDITION:
        raise IllConditioned(
            f"labelled covariance block has condition number "
            f"{ev[-1] / ev[0] if ev[0] > 0 else np.inf:.3e}; use solve_truncated")
    try:
        return sla.cho_factor(Cp, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded above
        raise IllConditioned(str(exc)) from exc


def reduced_objective(problem: ProbitProblem, b, cho=None) -> float:
    idx, y = problem.labels.indices, problem.labels.values
    if cho is None:
        cho = factor_submatrix(problem.covariance.submatrix(idx))
    b = np.asarray(b, dtype=float)
    return 0.5 * float(b @ sla.cho_solve(cho, b)) + probit_potential(problem.noise, b, y)


def reduced_gradient(problem: ProbitProblem, b, cho=None) -> np.ndarray:
    idx, y = problem.labels.indices, problem.labels.values
    if cho is None:
        cho = factor_submatrix(problem.covariance.submatrix(idx))
    b = np.asarray(b, dtype=float)
    return sla.cho_solve(cho, b) - probit_F(problem.noise, b, y)


def reconstruct(b_star, cov, labelled) -> np.ndarray:
    """``u = Σ_j ((C')^{-1} b)_j c_j`` over the labelled nodes."""
    labelled = np.asarray(labelled, dtype=int)
    b_star = np.asarray(b_star, dtype=float)
    if labelled.size == 0:
        return np.zeros(cov.n)
    cho = factor_submatrix(cov.submatrix(labelled))
    a = sla.cho_solve(cho, b_star)
    return cov.columns(labelled) @ a


def solve_reduced(problem: ProbitProblem, *, tol=1e-10, max_iter=100) -> ProbitSolution:
    """Newton on ``J'(b) = ½<b, C'^{-1} b> - Σ log Psi(b_k y_k)``, then rebuild u."""
    idx, y = problem.labels.indices, problem.labels.values
    if idx.size == 0:
        raise ValueError("reduced solve needs at least one label")
    noise, cov = problem.noise, problem.covariance
    Cp = cov.submatrix(idx)
    cho = factor_submatrix(Cp)
    J = idx.size

    def value(b):
        return 0.5 * float(b @ sla.cho_solve(cho, b)) + probit_potential(noise, b, y)

    def model(b):
        a = sla.cho_solve(cho, b)
        F = probit_F(noise, b, y)
        g = a - F
        d = -probit_F_prime(noise, b, y)
        # (C'^{-1} + D) step = -g, multiplied through by C'
        step = np.linalg.solve(np.eye(J) + Cp * d[None, :], -(b - Cp @ F))
        return g, step, float(np.linalg.norm(g))

    res = damped_newton(value, model, np.zeros(J), tol=tol, max_iter=max_iter,
                        what="probit reduced solve")
    b = res.x
    a = sla.cho_solve(cho, b)
    u = cov.columns(idx) @ a
    diag = res.diagnostics() | {"method": "reduced"}
    return ProbitSolution(u, b, a, idx, diag)


# -- truncated ---------------------------------------------------------------

def solve_truncated(problem: ProbitProblem, n: int | None = None, *, tol=1e-10,
                    max_iter=100) -> ProbitSolution:
    """Solve ``u = Σ_j F_j(u_j) Ĉ e_j`` with a rank-``n`` covariance.

    Newton runs on the column coefficients ``a`` (``u = Ĉ[:, Z'] a``) with the
    residual ``a - F(Ĉ' a)``. The Jacobian ``I + D Ĉ'`` stays invertible even
    when ``Ĉ'`` is singular, and the steps are exact Newton steps for the
    convex merit ``½<a, Ĉ' a> - Σ log Psi((Ĉ' a)_k y_k)``.
    """
    cov = problem.covariance
    if n is not None:
        if isinstance(cov, TruncatedCovariance):
            cov = cov.source
        cov = truncate(cov, n)
    elif not isinstance(cov, TruncatedCovariance):
        raise ValueError("pass a truncation rank or a TruncatedCovariance")
    idx, y = problem.labels.indices, problem.labels.values
    noise = problem.noise
    if idx.size == 0:
        return ProbitSolution(np.zeros(cov.n), np.zeros(0), np.zeros(0), idx,
                              {"iterations": 0, "final_grad_norm": 0.0, "objective": 0.0,
                               "method": "truncated", "rank": cov.rank})
    Cp = cov.submatrix(idx)
    J = idx.size

    def value(a):
        return 0.5 * float(a @ Cp @ a) + probit_potential(noise, Cp @ a, y)

    def model(a):
        b = Cp @ a
        r = a - probit_F(noise, b, y)
        d = -probit_F_prime(noise, b, y)
        step = np.linalg.solve(np.eye(J) + d[:, None] * Cp, -r)
        g = Cp @ r
        # a -> F(Ĉ'a) moves b by -g, so it leaves a residual of about
        # max|F'| * |g|. This is what matters when Ĉ' is singular and r has
        # a null-space part the merit cannot see.
        return g, step, float(min(np.linalg.norm(r), d.max() * np.linalg.norm(g)))

    res = damped_newton(value, model, np.zeros(J), tol=tol, max_iter=max_iter,
                        what="probit truncated solve")
    a = res.x
    r = a - probit_F(noise, Cp @ a, y)
    if np.linalg.norm(r) > res.residual:
        a = probit_F(noise, Cp @ a, y)
        r = a - probit_F(noise, Cp @ a, y)
    u = cov.columns(idx) @ a
    diag = res.diagnostics() | {"method": "truncated", "rank": cov.rank,
                                "final_grad_norm": float(np.linalg.norm(r))}
    return ProbitSolution(u, Cp @ a, a, idx, diag)
