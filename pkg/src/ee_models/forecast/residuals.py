"""
Residual process diagnostic shared by the point-process models.

Event times transformed by the fitted compensator form a unit-rate Poisson
process if the model is right; rescaled to (0, 1] they are uniform.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import stats

logger = logging.getLogger("ee-models.forecast")

SMALL_SAMPLE = 100
MONOTONE_TOLERANCE = 1e-9

Compensator = Union[Callable[[np.ndarray], np.ndarray], Sequence[float]]


@dataclass(frozen=True)
class ResidualProcess:
    """Transformed residuals with the KS band and lag-1 pairs.

    ``tau`` are the compensator values at the events, ``u`` the ordered
    tau / Lambda(T). ``lag_pairs`` holds (U_i, U_i+1) with
    U_i = 1 - exp(-(tau_i - tau_i-1)), which are iid uniform under the model.
    """

    tau: np.ndarray
    u: np.ndarray
    ecdf: np.ndarray
    band: float
    lower: np.ndarray
    upper: np.ndarray
    ks_statistic: float
    ks_pvalue: float
    lag_pairs: np.ndarray
    level: float = 0.95

    @property
    def inside_band(self) -> bool:
        return self.ks_statistic <= self.band


def ks_band(n: int, level: float = 0.95) -> float:
    """Half-width d with P(D_n <= d) = level; exact distribution for n <= 100."""
    if n <= SMALL_SAMPLE:
        return float(stats.kstwo.ppf(level, n))
    return float(stats.kstwobign.ppf(level) / np.sqrt(n))


def residual_transform(
    cumulative: Compensator,
    event_times: Sequence[float],
    T: float,
    t0: float = 0.0,
    level: float = 0.95,
) -> ResidualProcess:
    """u_i = Lambda(t_i) / Lambda(T) with its empirical CDF and KS band.

    ``cumulative`` is a vectorized compensator t -> Lambda(t) with
    Lambda(t0) = 0, or its values at the event times followed by Lambda(T).

    Raises:
        ValueError: If the compensator decreases, does not start at 0, or
            there are no events
    """
    times = np.sort(np.asarray(event_times, dtype=float))
    if times.size == 0:
        raise ValueError("residual process needs at least one event")
    if callable(cumulative):
        values = np.asarray(cumulative(np.concatenate([[t0], times, [T]])), dtype=float)
        start, tau, total = values[0], values[1:-1], values[-1]
    else:
        values = np.asarray(cumulative, dtype=float)
        if values.shape != (times.size + 1,):
            raise ValueError(f"expected {times.size + 1} compensator values "
                             f"(events and T), got {values.size}")
        start, tau, total = 0.0, values[:-1], values[-1]
    scale = max(abs(total), 1.0)
    if abs(start) > MONOTONE_TOLERANCE * scale:
        raise ValueError(f"invalid compensator: Lambda(t0) = {start}, expected 0")
    path = np.concatenate([[start], tau, [total]])
    if np.any(np.diff(path) < -MONOTONE_TOLERANCE * scale):
        k = int(np.flatnonzero(np.diff(path) < -MONOTONE_TOLERANCE * scale)[0])
        raise ValueError(f"invalid compensator: non-monotone between {path[k]} and {path[k + 1]}")
    if not total > 0:
        raise ValueError(f"invalid compensator: Lambda(T) = {total} must be positive")

    u = np.clip(tau / total, 0.0, 1.0)
    n = u.size
    ecdf = np.arange(1, n + 1) / n
    d = ks_band(n, level)
    ks = stats.kstest(u, "uniform", method="exact" if n <= SMALL_SAMPLE else "asymp")
    gaps = np.diff(np.concatenate([[0.0], tau]))
    U = 1.0 - np.exp(-gaps)
    pairs = np.column_stack([U[:-1], U[1:]]) if n > 1 else np.zeros((0, 2))
    logger.debug(f"residual process: n={n} KS D={ks.statistic:.4g} p={ks.pvalue:.4g}")
    return ResidualProcess(
        tau=tau,
        u=u,
        ecdf=ecdf,
        band=d,
        lower=np.clip(u - d, 0.0, 1.0),
        upper=np.clip(u + d, 0.0, 1.0),
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        lag_pairs=pairs,
        level=level,
    )
