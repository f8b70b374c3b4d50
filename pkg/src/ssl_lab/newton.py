"""Damped Newton iteration with Armijo backtracking, shared by both solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError


@dataclass
class NewtonResult:
    x: np.ndarray
    value: float
    residual: float
    iterations: int
    history: list = field(default_factory=list)
    precision_steps: int = 0

    def diagnostics(self) -> dict:
        return {"iterations": self.iterations, "final_grad_norm": self.residual,
                "objective": self.value, "precision_steps": self.precision_steps}


def damped_newton(value, model, x0, *, tol=1e-10, max_iter=100, armijo=1e-4, what="Newton"):
    """Minimize a smooth convex function.

    ``value(x)`` returns the objective. ``model(x)`` returns ``(grad, step,
    residual)``: the gradient used for the sufficient-decrease test, the
    Newton direction, and the scalar that must fall below
    ``tol * max(1, residual(x0))`` for convergence.

    Steps are halved until the Armijo condition holds. Once the objective
    is flat to roundoff, the full Newton step is taken instead (counted in
    ``precision_steps``).
    """
    x = np.array(x0, dtype=float)
    f = value(x)
    grad, step, res = model(x)
    stop = tol * max(1.0, res)
    hist = [f]
    precision_steps = 0
    for it in range(max_iter + 1):
        if res <= stop:
            return NewtonResult(x, f, res, it, hist, precision_steps)
        if it == max_iter:
            break
        slope = float(np.dot(grad.ravel(), step.ravel()))
        if not slope < 0:
            step = -grad
            slope = -float(np.dot(grad.ravel(), grad.ravel()))
        t = 1.0
        accepted = False
        while t > 1e-10:
            x_new = x + t * step
            f_new = value(x_new)
            if f_new <= f + armijo * t * slope and f_new < f:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            x_new = x + step
            f_new = value(x_new)
            if not (np.isfinite(f_new) and f_new - f <= 1e-13 * (1.0 + abs(f))):
                raise ConvergenceError(
                    f"{what}: line search failed at iteration {it} (residual {res:.3e})",
                    x=x, grad_norm=res, iterations=it)
            precision_steps += 1
        x, f = x_new, f_new
        hist.append(f)
        grad, step, res = model(x)
    raise ConvergenceError(f"{what}: no convergence after {max_iter} iterations "
                           f"(residual {res:.3e}, target {stop:.3e})",
                           x=x, grad_norm=res, iterations=max_iter)
