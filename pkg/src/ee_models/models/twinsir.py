"""
Additive-intensity SIR event history model (twinSIR).

Susceptible i is infected with intensity

    lambda_i(t) = Y_i(t) [exp(beta_0 + z_i(t)' beta) + x_i(t)' alpha],  alpha >= 0,

constant on every block of the EventHistory. Epidemic coefficients carry
the term names; endemic ones are named "cox(logbaseline)" and "cox(<name>)".
"""
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import brentq, minimize
from scipy.stats import chi2, norm

from ..config.models import TwinSIRSpec
from ..core.optim import covariance_from_hessian, maximize
from ..core.parallel import parallel_map
from ..data.history import DistanceBasis, EventHistory, PairIndicator
from .base import LikelihoodModel, ModelFit, named_start

BASELINE = "cox(logbaseline)"
BOUNDARY = 1e-10
PROFILE_GRID = 25
PROFILE_WIDEN = 1.5
PROFILE_EXTENSIONS = 10
AIC_NOTE = ("plain AIC -2 logLik + 2 df; the one-sided AIC with simulated penalty weights "
            "is not computed")

Coefficients = Union[Mapping[str, float], np.ndarray, Sequence[float]]


def add_epidemic_terms(history: EventHistory, weights: Mapping[str, np.ndarray],
                       basis_fns: Optional[Mapping[str, DistanceBasis]] = None,
                       pair_covariates: Optional[Mapping[str, PairIndicator]] = None
                       ) -> EventHistory:
    """Add terms x_i(t) = sum_{j infectious} w_ij for N x N weight matrices."""
    infectious = history.infectious.astype(float)
    columns = dict(history.columns)
    for name, w in weights.items():
        w = np.array(w, dtype=float)
        if w.shape != (history.n_individuals,) * 2:
            raise ValueError(f"weights of term '{name}' have shape {w.shape}")
        np.fill_diagonal(w, 0.0)
        columns[name] = infectious @ w.T
    names = tuple(dict.fromkeys([*history.term_names, *weights]))
    return replace(history, columns=columns, term_names=names,
                   basis_fns={**history.basis_fns, **(basis_fns or {})},
                   pair_covariates={**history.pair_covariates, **(pair_covariates or {})})


def step_kernel_terms(history: EventHistory, knots: Sequence[float],
                      prefix: str = "B") -> EventHistory:
    """Indicator distance bases B1 = 1(0 < u < k1), B2 = 1(k1 <= u < k2), ..., 1(u >= kK).

    Raises:
        ValueError: If knots are not positive and strictly increasing
    """
    knots = [float(k) for k in knots]
    if not knots or knots[0] <= 0 or any(b <= a for a, b in zip(knots, knots[1:])):
        raise ValueError(f"invalid knots {knots}: must be positive and strictly increasing")
    edges = [0.0, *knots, math.inf]
    bases = {f"{prefix}{k + 1}": DistanceBasis(lo, hi, lower_closed=k > 0, upper_closed=False)
             for k, (lo, hi) in enumerate(zip(edges[:-1], edges[1:]))}
    return add_epidemic_terms(history, {n: b(history.distances) for n, b in bases.items()},
                              basis_fns=bases)


def _ensure_terms(spec: TwinSIRSpec, history: EventHistory) -> EventHistory:
    bases = {n: DistanceBasis.from_spec(b) for n, b in spec.basis.items()
             if n not in history.columns}
    pairs = {n: PairIndicator.from_spec(p) for n, p in spec.pairs.items()
             if n not in history.columns}
    if not bases and not pairs:
        return history
    weights = {n: b(history.distances) for n, b in bases.items()}
    weights.update({n: p.matrix(history.individuals) for n, p in pairs.items()})
    return add_epidemic_terms(history, weights, bases, pairs)


@dataclass(kw_only=True)
class TwinSIRFit(ModelFit):
    """Fitted twinSIR model; ``alpha`` are the epidemic, ``beta`` the endemic coefficients."""

    spec: TwinSIRSpec
    history: EventHistory
    n_alpha: int
    model: "TwinSIRModel" = field(repr=False)

    @property
    def alpha(self) -> np.ndarray:
        return self.coefficients[: self.n_alpha]

    @property
    def beta(self) -> np.ndarray:
        return self.coefficients[self.n_alpha:]


class TwinSIRModel(LikelihoodModel):
    """Piecewise-constant twinSIR likelihood with analytic gradient and Hessian."""

    def __init__(self, spec: TwinSIRSpec, history: EventHistory, threads: int = 1):
        super().__init__()
        self.spec = spec
        self.threads = threads
        try:
            self.history = _ensure_terms(spec, history)
            self.X = self.history.term_matrices(spec.epidemic)
            Z = self.history.term_matrices(spec.endemic)
        except Exception as e:
            self._handle_error("build twinSIR design", e)
        if spec.intercept:
            Z = np.concatenate([np.ones(Z.shape[:2] + (1,)), Z], axis=2)
        self.Z = Z
        self.n_alpha = len(spec.epidemic)
        self.names = tuple([*spec.epidemic, *([BASELINE] if spec.intercept else []),
                            *[f"cox({n})" for n in spec.endemic]])
        h = self.history
        self.Y = h.at_risk.astype(float)
        self.dt = h.durations
        self.event_blocks = np.flatnonzero(h.event >= 0)
        self.event_ids = h.event[self.event_blocks]
        n_beta = len(self.names) - self.n_alpha
        self.bounds = [(0.0, None)] * self.n_alpha + [(None, None)] * n_beta

    @property
    def n_params(self) -> int:
        return len(self.names)

    def vector(self, coefficients: Coefficients) -> np.ndarray:
        if isinstance(coefficients, Mapping):
            missing = [n for n in self.names if n not in coefficients]
            if missing:
                raise ValueError(f"coefficient '{missing[0]}' not found in the given values")
            theta = named_start(self.names, np.zeros(self.n_params), coefficients)
        else:
            theta = np.asarray(coefficients, dtype=float)
            if theta.shape != (self.n_params,):
                raise ValueError(f"expected {self.n_params} coefficients, got {theta.shape}")
        if np.any(theta[: self.n_alpha] < 0):
            raise ValueError("invalid epidemic coefficients: alpha must be nonnegative")
        return theta

    def parts(self, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Endemic exp(z'beta) and epidemic x'alpha per (block, individual), times Y."""
        alpha, beta = theta[: self.n_alpha], theta[self.n_alpha:]
        if self.Z.shape[2]:
            endemic = np.exp(self.Z @ beta)
        else:
            endemic = np.zeros(self.Y.shape)
        epidemic = self.X @ alpha if self.n_alpha else np.zeros(self.Y.shape)
        return self.Y * endemic, self.Y * epidemic

    def _event_terms(self, theta: np.ndarray):
        b, i = self.event_blocks, self.event_ids
        endemic, epidemic = self.parts(theta)
        lam = endemic[b, i] + epidemic[b, i]
        if np.any(~(lam > 0)):
            k = int(np.flatnonzero(~(lam > 0))[0])
            when = self.history.block_bounds[b[k], 1]
            raise ValueError(f"invalid intensity {lam[k]} at the infection of individual "
                             f"'{self.history.ids[i[k]]}' (time {when})")
        return endemic, epidemic, lam, self.X[b, i], self.Z[b, i], endemic[b, i]

    def loglik(self, theta: np.ndarray) -> Tuple[float, np.ndarray]:
        theta = np.asarray(theta, dtype=float)
        endemic, epidemic, lam, x_ev, z_ev, nu_ev = self._event_terms(theta)
        dt = self.dt[:, None]
        value = float(np.log(lam).sum() - np.sum(dt * (endemic + epidemic)))
        grad_alpha = (x_ev / lam[:, None]).sum(axis=0) - np.tensordot(
            dt * self.Y, self.X, axes=([0, 1], [0, 1]))
        grad_beta = (z_ev * (nu_ev / lam)[:, None]).sum(axis=0) - np.tensordot(
            dt * endemic, self.Z, axes=([0, 1], [0, 1]))
        return value, np.concatenate([grad_alpha, grad_beta])

    def hessian(self, theta: np.ndarray) -> np.ndarray:
        endemic, _, lam, x_ev, z_ev, nu_ev = self._event_terms(theta)
        dz = z_ev * (nu_ev / lam)[:, None]
        dx = x_ev / lam[:, None]
        d = np.concatenate([dx, dz], axis=1)
        H = -d.T @ d
        weighted = self.dt[:, None, None] * endemic[:, :, None] * self.Z
        a = self.n_alpha
        H[a:, a:] += z_ev.T @ (z_ev * (nu_ev / lam)[:, None]) - np.tensordot(
            weighted, self.Z, axes=([0, 1], [0, 1]))
        return H

    def default_start(self) -> np.ndarray:
        theta = np.zeros(self.n_params)
        n_events = max(len(self.event_blocks), 1)
        exposure = float(np.sum(self.dt[:, None] * self.Y))
        if BASELINE in self.names and exposure > 0:
            theta[self.names.index(BASELINE)] = math.log(n_events / exposure)
        if self.n_alpha:
            pressure = np.tensordot(self.dt[:, None] * self.Y, self.X, axes=([0, 1], [0, 1]))
            share = 0.5 * n_events / self.n_alpha
            theta[: self.n_alpha] = np.where(pressure > 0,
                                             share / np.maximum(pressure, 1e-300), 0.0)
        return theta

    def covariance(self, theta: np.ndarray) -> np.ndarray:
        """Inverse observed information; alphas on the boundary get zero rows."""
        p = self.n_params
        free = [k for k in range(p) if k >= self.n_alpha or theta[k] > BOUNDARY]
        cov = np.zeros((p, p))
        if free:
            idx = np.asarray(free)
            cov[np.ix_(idx, idx)] = covariance_from_hessian(self.hessian(theta)[np.ix_(idx, idx)])
        return cov

    def fit(self, start: Optional[Dict[str, float]] = None) -> TwinSIRFit:
        theta0 = named_start(self.names, self.default_start(), {**self.spec.start, **(start or {})})
        theta0[: self.n_alpha] = np.maximum(theta0[: self.n_alpha], 0.0)
        self.logger.info(f"fitting twinSIR with {self.n_params} parameters on "
                         f"{len(self.event_blocks)} infections")
        try:
            result = maximize(self.loglik, theta0, bounds=self.bounds)
        except Exception as e:
            self._handle_error("fit twinSIR model", e)
        self._log_result("twinSIR", result)
        theta = result.par
        at_bound = [self.names[k] for k in range(self.n_alpha) if theta[k] <= BOUNDARY]
        if at_bound:
            self.logger.info(f"estimates on the boundary alpha = 0 (one-sided): {at_bound}")
        return TwinSIRFit(
            names=self.names,
            coefficients=theta,
            cov=self.covariance(theta),
            loglik=result.loglik,
            converged=result.converged,
            iterations=result.iterations,
            message=result.message,
            n_obs=len(self.event_blocks),
            extra={"aicNote": AIC_NOTE, "boundary": at_bound},
            spec=self.spec,
            history=self.history,
            n_alpha=self.n_alpha,
            model=self,
        )

    def profile(self, k: int, value: float, start: np.ndarray) -> float:
        """Maximized log-likelihood with parameter k fixed at value."""
        others = [j for j in range(self.n_params) if j != k]

        def objective(sub: np.ndarray) -> Tuple[float, np.ndarray]:
            theta = start.copy()
            theta[others] = sub
            theta[k] = value
            try:
                v, g = self.loglik(theta)
            except ValueError:
                return np.inf, np.zeros_like(sub)
            return -v, -g[others]

        sub0 = start[others].copy()
        bounds = [self.bounds[j] for j in others]
        res = minimize(objective, sub0, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": 500, "ftol": 1e-14, "gtol": 1e-8})
        if not np.isfinite(res.fun):
            raise RuntimeError(f"profile maximization failed at {self.names[k]} = {value}")
        return -float(res.fun)


def cif_twinsir(fit: Union[TwinSIRFit, TwinSIRModel], individual: Union[str, int], block: int,
                coefficients: Optional[Coefficients] = None) -> float:
    """lambda_i on a block (1-based, as in the BLOCK column)."""
    if isinstance(fit, TwinSIRFit):
        model = fit.model
        theta = fit.coefficients if coefficients is None else model.vector(coefficients)
    else:
        if coefficients is None:
            raise ValueError("coefficients are required when evaluating a model without a fit")
        model, theta = fit, fit.vector(coefficients)
    history = model.history
    if isinstance(individual, str):
        if individual not in history.ids:
            raise ValueError(f"individual '{individual}' not found")
        i = history.ids.index(individual)
    else:
        i = int(individual)
    if not 1 <= block <= history.n_blocks or not 0 <= i < history.n_individuals:
        raise ValueError(f"invalid index: block {block}, individual {individual}")
    endemic, epidemic = model.parts(theta)
    return float(endemic[block - 1, i] + epidemic[block - 1, i])


def loglik_twinsir(spec: TwinSIRSpec, coefficients: Coefficients,
                   history: EventHistory) -> Tuple[float, np.ndarray]:
    model = TwinSIRModel(spec, history)
    return model.loglik(model.vector(coefficients))


def fit_twinsir(spec: TwinSIRSpec, history: EventHistory,
                start: Optional[Dict[str, float]] = None, threads: int = 1) -> TwinSIRFit:
    return TwinSIRModel(spec, history, threads).fit(start)


def intensity_path(fit: TwinSIRFit, history: Optional[EventHistory] = None) -> pd.DataFrame:
    """Total, endemic and epidemic ground intensity per block."""
    model = fit.model if history is None else TwinSIRModel(fit.spec, history)
    endemic, epidemic = model.parts(fit.coefficients)
    bounds = model.history.block_bounds
    return pd.DataFrame({
        "start": bounds[:, 0],
        "stop": bounds[:, 1],
        "endemic": endemic.sum(axis=1),
        "epidemic": epidemic.sum(axis=1),
        "total": endemic.sum(axis=1) + epidemic.sum(axis=1),
    })


def epidemic_proportion(fit: TwinSIRFit, history: Optional[EventHistory] = None) -> pd.DataFrame:
    """Epidemic share of the total intensity per block; 0 where the total is 0."""
    path = intensity_path(fit, history)
    total = path["total"].to_numpy()
    share = np.divide(path["epidemic"].to_numpy(), total, out=np.zeros_like(total),
                      where=total > 0)
    return pd.DataFrame({"start": path["start"], "stop": path["stop"], "proportion": share})


def cumulative_intensity(fit: TwinSIRFit, times: Sequence[float],
                         history: Optional[EventHistory] = None) -> np.ndarray:
    """Compensator Lambda(t) = int_t0^t sum_i lambda_i(u) du."""
    path = intensity_path(fit, history)
    t = np.asarray(times, dtype=float)
    start, stop = path["start"].to_numpy(), path["stop"].to_numpy()
    overlap = np.clip(np.minimum(t[:, None], stop[None, :]) - start[None, :], 0, None)
    return overlap @ path["total"].to_numpy()


def confint_twinsir(fit: TwinSIRFit, name: str, level: float = 0.95,
                    exp: bool = False) -> Tuple[float, float]:
    """Wald interval, optionally exp-transformed; alpha intervals are cut at 0."""
    lo, hi = fit.wald(name, level)
    if fit.index(name) < fit.n_alpha:
        lo = max(lo, 0.0)
    if exp:
        return math.exp(lo), math.exp(hi)
    return lo, hi


def _interpolate_failed(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    ok = np.isfinite(values)
    if ok.sum() < 2:
        return values
    return np.where(ok, values, np.interp(grid, grid[ok], values[ok]))


def profile_ci(
    fit: TwinSIRFit,
    params: Sequence[Union[str, int]],
    grid_size: int = PROFILE_GRID,
    level: float = 0.95,
    threads: int = 1,
) -> Dict[str, Dict[str, Any]]:
    """Profile log-likelihood curves and highest-likelihood intervals.

    The grid spans the Wald interval widened by half its width; interval
    endpoints are located by root finding on the profile and may lie beyond
    the grid. Grid points whose maximization fails are flagged and filled by
    linear interpolation.

    Raises:
        ValueError: For an unknown parameter or level outside (0, 1)
    """
    if not 0 < level < 1:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if grid_size < 3:
        raise ValueError(f"grid size must be at least 3, got {grid_size}")
    model = fit.model
    cutoff = -chi2.ppf(level, df=1) / 2
    q = norm.ppf(0.5 + level / 2)
    out: Dict[str, Dict[str, Any]] = {}
    for param in params:
        k = fit.index(param) if isinstance(param, str) else int(param)
        if not 0 <= k < len(fit.names):
            raise ValueError(f"invalid parameter index {param}")
        name = fit.names[k]
        est, se = float(fit.coefficients[k]), float(fit.se[k])
        half = PROFILE_WIDEN * q * max(se, 1e-8 * max(1.0, abs(est)))
        lower_bound = 0.0 if k < fit.n_alpha else -math.inf
        grid = np.linspace(max(est - half, lower_bound), est + half, grid_size)

        def normalized(value: float) -> float:
            return model.profile(k, value, fit.coefficients) - fit.loglik

        def safe(value: float) -> float:
            try:
                return normalized(value)
            except (RuntimeError, ValueError, FloatingPointError) as e:
                model.logger.warning(f"profile of {name} failed at {value:.6g}: {e}")
                return math.nan

        values = np.array(parallel_map(safe, list(grid), threads))
        failed = ~np.isfinite(values)
        values = _interpolate_failed(values, grid)

        def endpoint(direction: int) -> float:
            inner = est
            step = half
            for _ in range(PROFILE_EXTENSIONS):
                outer = inner + direction * step
                if direction < 0 and outer <= lower_bound:
                    outer = lower_bound
                    if safe(outer) - cutoff >= 0:
                        return lower_bound
                value = safe(outer)
                if math.isfinite(value) and value - cutoff < 0:
                    return brentq(lambda v: normalized(v) - cutoff, min(inner, outer),
                                  max(inner, outer), xtol=1e-10)
                inner = outer
                step *= 2
            model.logger.warning(f"profile of {name} did not reach the cutoff")
            return math.nan

        out[name] = {
            "grid": pd.DataFrame({"value": grid, "profile": values, "failed": failed}),
            "hl": (endpoint(-1), endpoint(1)),
            "wald": confint_twinsir(fit, name, level),
        }
    return out
