"""
Base classes and utilities for the likelihood engines.

This module provides the foundation shared by hhh4, twinstim and twinSIR:
- ModelFit, the fitted-model record with standard errors, AIC/BIC,
  coefficient tables and Wald intervals
- LikelihoodModel, the engine base class with standardized logging and
  error handling

Every engine inherits from LikelihoodModel so failures surface the same way
(ValueError for bad input, RuntimeError for numerical breakdown) and log
through the "ee-models.<engine>" logger.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, NoReturn, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import norm

from ..core.optim import OptimResult, covariance_from_hessian, hessian_from_score


@dataclass(kw_only=True)
class ModelFit:
    """Fitted coefficients (internal scale), covariance and convergence record."""

    names: Tuple[str, ...]
    coefficients: np.ndarray
    cov: np.ndarray
    loglik: float
    converged: bool
    iterations: int = 0
    message: str = ""
    n_obs: int = 0
    fixed: Tuple[str, ...] = ()
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.maximum(np.diag(self.cov), 0.0)) if self.cov.size else np.zeros(0)

    @property
    def df(self) -> int:
        return len(self.names) - len(self.fixed)

    @property
    def aic(self) -> float:
        return -2 * self.loglik + 2 * self.df

    @property
    def bic(self) -> float:
        return -2 * self.loglik + math.log(max(self.n_obs, 1)) * self.df

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValueError(f"coefficient '{name}' not found; available: "
                             f"{', '.join(self.names)}") from None

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.index(name)])

    def coef_table(self) -> pd.DataFrame:
        """Estimate, standard error, z statistic and two-sided p-value."""
        se = self.se
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, self.coefficients / se, np.nan)
        return pd.DataFrame({
            "name": list(self.names),
            "estimate": self.coefficients,
            "se": se,
            "z": z,
            "p": 2 * norm.sf(np.abs(z)),
        })

    def wald(
        self,
        name: str,
        level: float = 0.95,
        transform: Optional[Callable[[float], float]] = None,
    ) -> Tuple[float, float]:
        """Wald interval on the internal scale, mapped through ``transform``.

        ``transform`` must be increasing; e.g. ``math.exp`` for rate ratios.
        """
        if not 0 < level < 1:
            raise ValueError(f"level must be in (0, 1), got {level}")
        k = self.index(name)
        q = norm.ppf(0.5 + level / 2)
        est, se = float(self.coefficients[k]), float(self.se[k])
        lo, hi = est - q * se, est + q * se
        if transform is not None:
            lo, hi = transform(lo), transform(hi)
        return lo, hi

    def to_record(self) -> Dict[str, Any]:
        """JSON-ready dictionary of the fit."""
        return {
            "coefficients": dict(zip(self.names, map(float, self.coefficients))),
            "se": dict(zip(self.names, map(float, self.se))),
            "cov": np.asarray(self.cov, dtype=float).tolist(),
            "logLik": float(self.loglik),
            "aic": float(self.aic),
            "bic": float(self.bic),
            "df": self.df,
            "nobs": self.n_obs,
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "message": self.message,
            **self.extra,
        }


def aic_table(fits: Dict[str, ModelFit]) -> pd.DataFrame:
    """df and AIC of several fits, best first."""
    rows = [{"model": name, "df": fit.df, "AIC": fit.aic} for name, fit in fits.items()]
    return pd.DataFrame(rows).sort_values("AIC", kind="stable").reset_index(drop=True)


class LikelihoodModel:
    """Base class for the likelihood engines.

    This class provides common functionality used by all engines:
    - Standardized logging
    - Error handling
    - Covariance from the differenced score at the optimum

    Subclasses implement ``loglik(theta) -> (value, gradient)``.
    """

    def __init__(self) -> None:
        """Initialize the engine logger."""
        self.logger = logging.getLogger(f"ee-models.{self.__class__.__name__.lower()}")

    def loglik(self, theta: np.ndarray) -> Tuple[float, np.ndarray]:
        raise NotImplementedError

    def _score(self, theta: np.ndarray) -> np.ndarray:
        return self.loglik(theta)[1]

    def _covariance(self, theta: np.ndarray, free: Optional[Sequence[int]] = None) -> np.ndarray:
        """Inverse observed information; ``free`` restricts to unconstrained coordinates."""
        p = theta.size
        if free is None or len(free) == p:
            return covariance_from_hessian(hessian_from_score(self._score, theta))
        idx = np.asarray(free, dtype=int)

        def reduced(sub: np.ndarray) -> np.ndarray:
            full = theta.copy()
            full[idx] = sub
            return self._score(full)[idx]

        cov = np.zeros((p, p))
        if idx.size:
            cov[np.ix_(idx, idx)] = covariance_from_hessian(hessian_from_score(reduced, theta[idx]))
        return cov

    def _log_result(self, what: str, result: OptimResult) -> None:
        if result.converged:
            self.logger.info(f"fitted {what}: logLik {result.loglik:.4f} after "
                             f"{result.iterations} iterations")
        else:
            self.logger.warning(f"{what} fit did not converge: {result.message}")

    def _handle_error(self, operation: str, error: Exception) -> NoReturn:
        """Handle and log errors from engine operations.

        Provides standardized error handling across all engines by:
        - Logging errors with appropriate context
        - Categorizing errors into specific exception types

        Args:
            operation: Description of the operation that failed (e.g., "fit hhh4 model")
            error: The exception that occurred during the operation

        Raises:
            ValueError: For invalid input, unknown names or points outside the domain
            RuntimeError: For unexpected numerical failures
        """
        error_msg = str(error)
        self.logger.error(f"Failed to {operation}: {error_msg}")

        lowered = error_msg.lower()
        if "not found" in lowered:
            raise ValueError(f"Not found: {error_msg}") from error
        if "invalid" in lowered or "outside" in lowered:
            raise ValueError(f"Invalid input: {error_msg}") from error
        if isinstance(error, ValueError):
            raise ValueError(error_msg) from error

        raise RuntimeError(f"Failed to {operation}: {error_msg}") from error


def named_start(names: Sequence[str], defaults: np.ndarray,
                start: Optional[Dict[str, float]]) -> np.ndarray:
    """Overwrite default start values by name."""
    theta = np.asarray(defaults, dtype=float).copy()
    for key, value in (start or {}).items():
        if key not in names:
            raise ValueError(f"start value for unknown coefficient '{key}' "
                             f"(not found in {list(names)})")
        theta[list(names).index(key)] = float(value)
    return theta
