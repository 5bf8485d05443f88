"""
Likelihood maximization helpers shared by the three engines.

- ``maximize`` wraps scipy's quasi-Newton minimizers (BFGS, or L-BFGS-B when
  bounds are given) around a function returning (logLik, gradient)
- ``hessian_from_score`` differences the analytic gradient centrally
- ``covariance_from_hessian`` inverts the observed information
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

logger = logging.getLogger("ee-models.optim")

Objective = Callable[[np.ndarray], Tuple[float, np.ndarray]]
Bounds = Sequence[Tuple[Optional[float], Optional[float]]]

MAX_ITERATIONS = 500
GRADIENT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class OptimResult:
    """Outcome of a likelihood maximization."""

    par: np.ndarray
    loglik: float
    gradient: np.ndarray
    converged: bool
    iterations: int
    message: str


def projected_gradient(par: np.ndarray, gradient: np.ndarray,
                       bounds: Optional[Bounds]) -> np.ndarray:
    """Ascent gradient with components pointing out of the box zeroed."""
    if bounds is None:
        return gradient
    out = gradient.copy()
    for k, (lo, hi) in enumerate(bounds):
        if lo is not None and par[k] <= lo and out[k] < 0:
            out[k] = 0.0
        if hi is not None and par[k] >= hi and out[k] > 0:
            out[k] = 0.0
    return out


def maximize(
    objective: Objective,
    start: np.ndarray,
    bounds: Optional[Bounds] = None,
    maxiter: int = MAX_ITERATIONS,
    gtol: float = GRADIENT_TOLERANCE,
) -> OptimResult:
    """Maximize a log-likelihood with an analytic gradient.

    Args:
        objective: Function returning (logLik, gradient) at a parameter vector
        start: Start values
        bounds: Optional (lower, upper) per parameter; switches to L-BFGS-B
        maxiter: Iteration limit
        gtol: Convergence requires the (projected) gradient max-norm below this

    Returns:
        OptimResult at the best point found; ``converged`` is False when the
        iteration limit was hit or the gradient stayed above ``gtol``
    """
    start = np.asarray(start, dtype=float)

    def negated(theta: np.ndarray) -> Tuple[float, np.ndarray]:
        try:
            value, grad = objective(theta)
        except (ValueError, FloatingPointError, OverflowError) as e:
            logger.debug(f"objective failed at {theta}: {e}")
            return np.inf, np.zeros_like(theta)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            return np.inf, np.zeros_like(theta)
        return -value, -np.asarray(grad, dtype=float)

    if start.size == 0:
        value, grad = objective(start)
        return OptimResult(start, float(value), np.asarray(grad), True, 0, "no free parameters")

    if bounds is None:
        res = minimize(negated, start, jac=True, method="BFGS",
                       options={"maxiter": maxiter, "gtol": gtol})
    else:
        res = minimize(negated, start, jac=True, method="L-BFGS-B", bounds=list(bounds),
                       options={"maxiter": maxiter, "gtol": gtol, "ftol": 1e-15})

    par = np.asarray(res.x, dtype=float)
    value, grad = objective(par)
    grad = np.asarray(grad, dtype=float)
    gmax = float(np.max(np.abs(projected_gradient(par, grad, bounds))))
    # precision loss in the line search with a near-zero gradient is an optimum
    converged = bool(res.success) or gmax < gtol or (res.status == 2 and gmax < np.sqrt(gtol))
    if res.nit >= maxiter:
        converged = False
    message = str(res.message)
    if not converged:
        logger.warning(f"optimizer did not converge after {res.nit} iterations "
                       f"(max |gradient| {gmax:.3g}): {message}")
    else:
        logger.debug(f"converged after {res.nit} iterations, logLik {value:.6f}")
    return OptimResult(par, float(value), grad, converged, int(res.nit), message)


def hessian_from_score(score: Callable[[np.ndarray], np.ndarray], theta: np.ndarray) -> np.ndarray:
    """Central-difference Hessian of the log-likelihood from its gradient.

    Step per coordinate is 1e-5 * max(1, |theta_k|); the result is symmetrized.
    """
    theta = np.asarray(theta, dtype=float)
    p = theta.size
    hessian = np.empty((p, p))
    for k in range(p):
        h = 1e-5 * max(1.0, abs(theta[k]))
        up = theta.copy()
        down = theta.copy()
        up[k] += h
        down[k] -= h
        hessian[:, k] = (np.asarray(score(up)) - np.asarray(score(down))) / (2 * h)
    return (hessian + hessian.T) / 2


def covariance_from_hessian(hessian: np.ndarray) -> np.ndarray:
    """Inverse observed information; NaN where the information is singular."""
    p = hessian.shape[0]
    if p == 0:
        return np.zeros((0, 0))
    try:
        cov = np.linalg.inv(-hessian)
    except np.linalg.LinAlgError:
        logger.warning("observed information is singular; standard errors unavailable")
        return np.full((p, p), np.nan)
    if np.any(np.diag(cov) < 0):
        logger.warning("observed information is not positive definite at the optimum")
    return cov
