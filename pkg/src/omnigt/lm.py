"""Damped least-squares (Levenberg-Marquardt) driver.

One driver serves both the board calibration and the wand pose refinement.
The schedule is fixed: damping starts at 1e-3, multiplies by 10 on a
rejected step, divides by 10 on an accepted one, and iteration stops when
the relative cost change of an accepted step drops below the tolerance or
the iteration budget runs out.  Accepted steps never increase the cost, and
the accepted-cost history is kept on the result for inspection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from .errors import NumericalFailure

_MAX_DAMPING = 1e12
_ABS_COST_FLOOR = 1e-20


@dataclass(frozen=True)
class LMOptions:
    max_iterations: int = 200
    cost_tolerance: float = 1e-12
    initial_damping: float = 1e-3
    damping_increase: float = 10.0
    damping_decrease: float = 10.0


@dataclass
class LMResult:
    params: np.ndarray
    cost: float
    cost_history: List[float]  # initial cost followed by each accepted cost
    iterations: int
    converged: bool


def levenberg_marquardt(
    residuals: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    options: LMOptions | None = None,
) -> LMResult:
    """Minimize sum(residuals(x)**2) from x0.

    `residuals` maps parameters to an (n,) vector; `jacobian` returns its
    (n, m) derivative.  Damping scales the diagonal of J^T J so parameters
    of very different magnitudes (focal lengths vs. distortion coefficients
    vs. millimetre translations) stay well-conditioned.
    """
    opts = options or LMOptions()
    x = np.array(x0, dtype=float)
    r = residuals(x)
    cost = float(r @ r)
    if not np.isfinite(cost):
        raise NumericalFailure("initial residuals are not finite")
    history = [cost]
    damping = opts.initial_damping
    iterations = 0
    converged = cost <= _ABS_COST_FLOOR

    while not converged and iterations < opts.max_iterations:
        iterations += 1
        J = jacobian(x)
        if not np.isfinite(J).all():
            raise NumericalFailure("Jacobian is not finite")
        JtJ = J.T @ J
        g = J.T @ r
        diag = np.diag(JtJ).copy()
        diag[diag < 1e-12] = 1e-12
        stepped = False
        while damping <= _MAX_DAMPING:
            try:
                delta = np.linalg.solve(JtJ + damping * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                damping *= opts.damping_increase
                continue
            if not np.isfinite(delta).all():
                damping *= opts.damping_increase
                continue
            x_new = x + delta
            r_new = residuals(x_new)
            with np.errstate(over="ignore", invalid="ignore"):
                cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                rel_change = (cost - cost_new) / max(cost, 1e-300)
                x, r = x_new, r_new
                cost = cost_new
                history.append(cost)
                damping = max(damping / opts.damping_decrease, 1e-18)
                stepped = True
                if rel_change < opts.cost_tolerance or cost <= _ABS_COST_FLOOR:
                    converged = True
                break
            damping *= opts.damping_increase
        if not stepped:
            # no descent direction even at maximal damping: numerical floor
            converged = True
            damping = min(damping, _MAX_DAMPING)

    return LMResult(
        params=x,
        cost=cost,
        cost_history=history,
        iterations=iterations,
        converged=converged,
    )
