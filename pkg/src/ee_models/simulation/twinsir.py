"""
Forward simulation from fitted twinSIR models.

The total intensity sum_i Y_i lambda_i is constant between events, so
infection times are exponential waiting times truncated at the next
scheduled removal or covariate change.
"""
import logging
import math
from typing import Callable, List, Optional, Union

import numpy as np
import pandas as pd

from ..config.models import SimConfig
from ..core.parallel import parallel_map
from ..core.random import replicate_streams
from ..data.history import EventHistory, build_event_history
from ..models.twinsir import TwinSIRFit

logger = logging.getLogger("ee-models.simulation")

InfectiousPeriod = Union[float, Callable[[np.random.Generator], float]]


def observed_infectious_period(history: EventHistory) -> float:
    """Median observed tR - tI.

    Raises:
        ValueError: If no individual has both times observed
    """
    both = np.isfinite(history.infection_times) & np.isfinite(history.removal_times)
    if not both.any():
        raise ValueError("infectious period not given and no individual has both an "
                         "infection and a removal time")
    return float(np.median(history.removal_times[both] - history.infection_times[both]))


class TwinSIRSimulator:
    """Simulate SIR event histories from a twinSIR fit over the observed blocks."""

    def __init__(self, fit: TwinSIRFit, config: SimConfig,
                 infectious_period: Optional[InfectiousPeriod] = None):
        self.fit = fit
        self.config = config
        self.model = model = fit.model
        self.history = history = model.history
        self.t0, self.T = config.timeWindow or (history.t0, history.T)
        if self.t0 < history.t0 or self.T > history.T:
            raise ValueError(f"timeWindow ({self.t0}, {self.T}) exceeds the observed period "
                             f"({history.t0}, {history.T}]")
        period = infectious_period
        if period is None:
            period = observed_infectious_period(history)
            logger.info(f"using the median observed infectious period {period:.4g}")
        if callable(period):
            self.period: Callable[[np.random.Generator], float] = period
        else:
            if not period > 0:
                raise ValueError(f"infectious period must be positive, got {period}")
            self.period = lambda rng, p=float(period): p
        self.weights = self._weights()
        beta = fit.beta
        if model.Z.shape[2]:
            self.endemic = np.exp(model.Z @ beta)
        else:
            self.endemic = np.zeros(model.Y.shape)
        self.alpha = fit.alpha

    def _weights(self) -> np.ndarray:
        """(terms, N, N) weights w_ij of the epidemic terms, zero diagonal."""
        history = self.history
        out = []
        for name in self.fit.spec.epidemic:
            if name in history.basis_fns:
                w = np.asarray(history.basis_fns[name](history.distances), dtype=float)
            elif name in history.pair_covariates:
                w = history.pair_covariates[name].matrix(history.individuals)
            else:
                raise ValueError(f"epidemic term '{name}' has no distance basis or pair "
                                 "covariate to recompute it from")
            w = w.copy()
            np.fill_diagonal(w, 0.0)
            out.append(w)
        n = history.n_individuals
        return np.stack(out) if out else np.zeros((0, n, n))

    def _initial_state(self):
        history, t0 = self.history, self.t0
        tI, tR = history.infection_times.copy(), history.removal_times.copy()
        removed_at_start = ~history.at_risk[0] & ~history.infectious[0] & ~np.isfinite(tR)
        infectious = np.isfinite(tI) & (tI <= t0) & ~(np.isfinite(tR) & (tR <= t0))
        removed = removed_at_start | (np.isfinite(tR) & (tR <= t0))
        susceptible = ~infectious & ~removed
        return tI, tR, susceptible, infectious, removed

    def replicate(self, rng: np.random.Generator) -> EventHistory:
        history = self.history
        tI_obs, tR_obs, susceptible, infectious, removed = self._initial_state()
        n = history.n_individuals
        tI = np.full(n, np.nan)
        tR = np.full(n, np.nan)
        # keep the observed state at t0
        known = infectious | removed
        tI[known] = np.where(np.isfinite(tI_obs), tI_obs, self.t0)[known]
        tR[removed] = np.where(np.isfinite(tR_obs), tR_obs, self.t0)[removed]
        no_tI = removed & (tI >= tR)
        tI[no_tI] = tR[no_tI] - 1.0
        removal = np.full(n, np.inf)
        for i in np.flatnonzero(infectious):
            if np.isfinite(tR_obs[i]) and tR_obs[i] > self.t0:
                removal[i] = tR_obs[i]
            else:
                # residual time of an infectious period already under way
                removal[i] = self.t0 + rng.uniform() * self.period(rng)

        stops = history.block_bounds[:, 1]
        t = self.t0
        while t < self.T:
            b = min(int(np.searchsorted(stops, t, side="right")), len(stops) - 1)
            pressure = np.tensordot(self.alpha, self.weights[:, :, infectious].sum(axis=2),
                                    axes=1) if self.alpha.size else np.zeros(n)
            rates = np.where(susceptible, self.endemic[b] + pressure, 0.0)
            total = float(rates.sum())
            next_fixed = min(float(stops[b]), float(removal.min()), self.T)
            wait = rng.exponential(1.0 / total) if total > 0 else math.inf
            if t + wait < next_fixed:
                t += wait
                i = int(rng.choice(n, p=rates / total))
                susceptible[i], infectious[i] = False, True
                tI[i] = t
                removal[i] = t + self.period(rng)
                continue
            t = next_fixed
            for i in np.flatnonzero(removal <= t):
                infectious[i], removed[i] = False, True
                tR[i] = removal[i]
                removal[i] = np.inf
        tR[tR > self.T] = np.nan

        individuals = history.individuals.copy()
        individuals["tI"], individuals["tR"] = tI, tR
        return build_event_history(
            individuals,
            t0=self.t0,
            T=self.T,
            basis_fns=history.basis_fns,
            pair_covariates=history.pair_covariates,
            covariate_changes=history.time_varying,
        )


def simulate_twinsir(fit: TwinSIRFit, config: SimConfig,
                     infectious_period: Optional[InfectiousPeriod] = None) -> List[EventHistory]:
    """Simulate ``config.nsim`` event histories.

    ``infectious_period`` is a fixed delay from infection to removal or a
    callable drawing one from a generator (default: the median observed delay).
    Individuals infectious or removed at the window start keep their state.

    Raises:
        ValueError: If an epidemic term cannot be recomputed or the window
            exceeds the observed period
    """
    simulator = TwinSIRSimulator(fit, config, infectious_period)
    logger.info(f"simulating {config.nsim} twinSIR histories over "
                f"({simulator.t0}, {simulator.T}]")
    return parallel_map(simulator.replicate, replicate_streams(config.seed, config.nsim),
                        config.threads)


def final_sizes(histories: List[EventHistory]) -> pd.Series:
    """Number of infections per simulated history."""
    return pd.Series([int((h.event >= 0).sum()) for h in histories], name="infections")
