"""
Endemic-epidemic spatio-temporal point process (twinstim).

The conditional intensity of a type-k event at (s, t) is

    lambda(s, t, k) = rho_[s][t] nu_[s][t]
                      + sum_{j in I(s, t, k)} eta_j f(|s - s_j|) g(t - t_j)

where the endemic part is piecewise constant on the stgrid and I(s, t, k)
holds the earlier events whose ranges eps_t / eps_s cover (s, t) and whose
type may infect type k according to the qmatrix.

Coefficient names: "h." endemic, "e." epidemic, "e.siaf.*" / "e.tiaf.*"
log-scale kernel parameters.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from ..config.models import TrendSpec, TwinstimSpec
from ..core.optim import maximize
from ..core.parallel import parallel_map
from ..data.points import PointPattern, min_separation
from ..geometry import point_in_polygon
from .base import LikelihoodModel, ModelFit, named_start
from .design import is_categorical, parse_term, season_columns, term_values, treatment_dummies
from .kernels import make_siaf, make_tiaf

INTERCEPT = "(Intercept)"
EPIDEMIC_START_SHARE = 0.1
IRLS_MAX_ITERATIONS = 100
IRLS_TOLERANCE = 1e-12

Coefficients = Union[Mapping[str, float], np.ndarray, Sequence[float]]


def trend_name(trend: TrendSpec) -> str:
    if trend.center == 0:
        return f"I(start/{trend.scale:g})"
    sign = "-" if trend.center > 0 else "+"
    return f"I(start/{trend.scale:g} {sign} {abs(trend.center):g})"


def _expand_term(term: str, frame: pd.DataFrame, types: Sequence[str],
                 type_values: Optional[pd.Series],
                 reference: Optional[pd.DataFrame] = None) -> Dict[str, np.ndarray]:
    """Columns of one formula term; categorical columns and "type" become dummies.

    Dummy levels come from ``reference`` (default: ``frame``).
    """
    name, is_log = parse_term(term)
    if name == "type" and type_values is not None:
        return treatment_dummies(type_values, "type", levels=list(types))
    if name not in frame.columns:
        raise ValueError(f"covariate '{name}' of term '{term}' not found")
    values = frame[name]
    if is_categorical(values):
        if is_log:
            raise ValueError(f"invalid term '{term}': log of categorical '{name}'")
        source = frame if reference is None else reference
        levels = None
        if not isinstance(source[name].dtype, pd.CategoricalDtype):
            levels = sorted(pd.unique(source[name].astype(str)))
        else:
            levels = [str(c) for c in source[name].cat.categories]
        return treatment_dummies(values, name, levels=levels)
    return {term: term_values(term, {name: values.to_numpy(dtype=float)})}


@dataclass(frozen=True)
class EndemicDesign:
    """Endemic log-rate design over stgrid rows (G) and types (K)."""

    names: Tuple[str, ...]
    X: np.ndarray  # G x K x p
    log_offset: np.ndarray  # G
    exposure: np.ndarray  # G: area * duration


def build_endemic_design(spec: TwinstimSpec, pattern: PointPattern) -> EndemicDesign:
    grid = pattern.stgrid
    n_rows, K = len(grid), len(pattern.types)
    columns: Dict[str, np.ndarray] = {}
    if spec.endemic.intercept:
        columns[INTERCEPT] = np.ones((n_rows, K))
    start = grid["start"].to_numpy(dtype=float)
    for term in spec.endemic.formulaTerms:
        if parse_term(term)[0] == "type":
            for name, dummy in treatment_dummies(pd.Series(pattern.types), "type",
                                                 levels=list(pattern.types)).items():
                columns[name] = np.tile(dummy[None, :], (n_rows, 1))
            continue
        for name, values in _expand_term(term, grid, pattern.types, None).items():
            columns[name] = np.tile(values[:, None], (1, K))
    if spec.endemic.trend is not None:
        trend = spec.endemic.trend
        columns[trend_name(trend)] = np.tile(
            (start / trend.scale - trend.center)[:, None], (1, K))
    if spec.endemic.season is not None:
        season = spec.endemic.season
        for name, values in season_columns(start, season.S, season.period, "start").items():
            columns[name] = np.tile(values[:, None], (1, K))

    if spec.endemic.offset is None:
        log_offset = np.zeros(n_rows)
    else:
        if spec.endemic.offset not in grid.columns:
            raise ValueError(f"offset column '{spec.endemic.offset}' not found in stgrid")
        offset = grid[spec.endemic.offset].to_numpy(dtype=float)
        if np.any(~(offset > 0)):
            k = int(np.flatnonzero(~(offset > 0))[0])
            raise ValueError(f"invalid offset {offset[k]} in stgrid row {k + 1}: "
                             "must be positive")
        log_offset = np.log(offset)
    names = tuple(f"h.{n}" for n in columns)
    X = np.stack(list(columns.values()), axis=2) if columns else np.zeros((n_rows, K, 0))
    exposure = grid["area"].to_numpy(dtype=float) * (
        grid["stop"].to_numpy(dtype=float) - start)
    return EndemicDesign(names, X, log_offset, exposure)


def build_epidemic_design(spec: TwinstimSpec, pattern: PointPattern) -> Tuple[Tuple[str, ...],
                                                                             np.ndarray]:
    """Epidemic log-rate design over events (n x q)."""
    return epidemic_matrix(spec, pattern.events, pattern.types)


def epidemic_matrix(spec: TwinstimSpec, events: pd.DataFrame, types: Sequence[str],
                    reference: Optional[pd.DataFrame] = None) -> Tuple[Tuple[str, ...],
                                                                        np.ndarray]:
    """Epidemic design rows for any event table, with dummy levels from ``reference``."""
    n = len(events)
    if spec.epidemic is None:
        return (), np.zeros((n, 0))
    columns: Dict[str, np.ndarray] = {}
    if spec.epidemic.intercept:
        columns[INTERCEPT] = np.ones(n)
    for term in spec.epidemic.formulaTerms:
        columns.update(_expand_term(term, events, types, events["type"].astype(str), reference))
    names = tuple(f"e.{c}" for c in columns)
    Z = np.column_stack(list(columns.values())) if columns else np.zeros((n, 0))
    return names, Z


@dataclass(kw_only=True)
class TwinstimFit(ModelFit):
    """Fitted twinstim model with cached per-event integrals.

    ``integrals["siaf"]`` holds int_{R_j} f and ``integrals["tiaf"]`` holds
    int_0^min(T - t_j, eps_t) g for every event j.
    """

    spec: TwinstimSpec
    pattern: PointPattern
    integrals: Dict[str, np.ndarray]
    model: "TwinstimModel" = field(repr=False)


class TwinstimModel(LikelihoodModel):
    """twinstim likelihood for a PointPattern.

    Parameter vector layout: endemic, epidemic, siaf, tiaf.
    """

    def __init__(self, spec: TwinstimSpec, pattern: PointPattern, threads: int = 1):
        super().__init__()
        self.spec = spec
        self.pattern = pattern
        self.threads = threads
        self.tol = spec.cubatureTol
        try:
            self.endemic = build_endemic_design(spec, pattern)
            self.epi_names, self.Z = build_epidemic_design(spec, pattern)
            self.siaf = make_siaf(spec.siaf)
            self.tiaf = make_tiaf(spec.tiaf)
        except Exception as e:
            self._handle_error("build twinstim design", e)
        self.has_epidemic = spec.epidemic is not None

        names = list(self.endemic.names) + list(self.epi_names)
        n_end, n_epi = len(self.endemic.names), len(self.epi_names)
        self.sl_end = slice(0, n_end)
        self.sl_epi = slice(n_end, n_end + n_epi)
        if self.has_epidemic:
            names += [f"e.siaf.{k + 1}" for k in range(self.siaf.n_params)]
            self.sl_siaf = slice(n_end + n_epi, n_end + n_epi + self.siaf.n_params)
            names += [f"e.tiaf.{k + 1}" for k in range(self.tiaf.n_params)]
        else:
            self.sl_siaf = slice(len(names), len(names))
        self.sl_tiaf = slice(self.sl_siaf.stop, len(names))
        self.names = tuple(names)

        events = pattern.events
        self.grid_row = events["grid_row"].to_numpy(dtype=np.int64)
        self.types = pattern.type_codes
        self.times = pattern.times
        self.coords = pattern.coords
        self.eps_t = events["eps_t"].to_numpy(dtype=float)
        self.eps_s = events["eps_s"].to_numpy(dtype=float)
        self.qsum = pattern.qmatrix.sum(axis=1)[self.types].astype(float)
        self.horizon = np.minimum(pattern.T - self.times, self.eps_t)
        self._pairs()
        self._cache_key: Optional[Tuple[bytes, float, bool]] = None
        self._cache_value: Tuple[np.ndarray, np.ndarray] = (np.zeros(0), np.zeros((0, 0)))

    def _pairs(self) -> None:
        """Source/target index pairs (j -> i) that can interact."""
        n = self.pattern.n_events
        if n == 0 or not self.has_epidemic:
            self.pair_i = self.pair_j = np.zeros(0, dtype=np.int64)
            self.pair_dist = self.pair_lag = np.zeros(0)
            return
        dist = cdist(self.coords, self.coords)
        lag = self.times[:, None] - self.times[None, :]
        q = self.pattern.qmatrix[self.types[None, :], self.types[:, None]]
        ok = (lag > 0) & (lag <= self.eps_t[None, :]) & (dist <= self.eps_s[None, :]) & q
        self.pair_i, self.pair_j = np.nonzero(ok)
        self.pair_dist = dist[self.pair_i, self.pair_j]
        self.pair_lag = lag[self.pair_i, self.pair_j]

    @property
    def n_params(self) -> int:
        return len(self.names)

    def vector(self, coefficients: Coefficients) -> np.ndarray:
        if isinstance(coefficients, Mapping):
            missing = [n for n in self.names if n not in coefficients]
            if missing:
                raise ValueError(f"coefficient '{missing[0]}' not found in the given values")
            return named_start(self.names, np.zeros(self.n_params), coefficients)
        theta = np.asarray(coefficients, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} coefficients, got {theta.shape}")
        return theta

    def spatial_integrals(self, ps: np.ndarray, tol: float,
                          deriv: bool = True) -> Tuple[np.ndarray, np.ndarray]:
        """int_{R_j} f and its parameter derivatives for every event (cached for the last call)."""
        key = (np.asarray(ps, dtype=float).tobytes(), tol, deriv)
        if key == self._cache_key:
            return self._cache_value
        regions = self.pattern.influence_regions
        if self.siaf.kind == "constant":
            values = np.array([r.area for r in regions])
            derivs = np.zeros((0, len(regions)))
        else:
            def one(region):
                value = self.siaf.integrate(region, ps, tol)
                grad = self.siaf.integrate_deriv(region, ps, tol) if deriv else np.zeros(0)
                return value, grad

            results = parallel_map(one, regions, self.threads)
            values = np.array([v for v, _ in results])
            derivs = np.array([g for _, g in results]).T if deriv and results else \
                np.zeros((self.siaf.n_params if deriv else 0, len(regions)))
        self._cache_key = key
        self._cache_value = (values, derivs)
        return values, derivs

    def endemic_rates(self, theta: np.ndarray) -> np.ndarray:
        """rho nu per stgrid row and type (G x K)."""
        beta = theta[self.sl_end]
        return np.exp(self.endemic.log_offset[:, None] + self.endemic.X @ beta)

    def eta(self, theta: np.ndarray) -> np.ndarray:
        if not self.has_epidemic:
            return np.zeros(self.pattern.n_events)
        return np.exp(self.Z @ theta[self.sl_epi])

    def eta_for(self, theta: np.ndarray, events: pd.DataFrame) -> np.ndarray:
        """eta of events outside the fitted pattern (e.g. simulated ones)."""
        if not self.has_epidemic:
            return np.zeros(len(events))
        names, Z = epidemic_matrix(self.spec, events, self.pattern.types, self.pattern.events)
        if names != self.epi_names:
            raise ValueError(f"invalid events: epidemic design {names} differs from the fit")
        return np.exp(Z @ theta[self.sl_epi])

    def temporal_integrals(self, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        pt = theta[self.sl_tiaf]
        return self.tiaf.G(self.horizon, pt), self.tiaf.dG(self.horizon, pt)

    def loglik(self, theta: np.ndarray, tol: Optional[float] = None) -> Tuple[float, np.ndarray]:
        theta = np.asarray(theta, dtype=float)
        tol = self.tol if tol is None else tol
        n = self.pattern.n_events
        grad = np.zeros(self.n_params)

        rates = self.endemic_rates(theta)
        cell_mass = rates * self.endemic.exposure[:, None]
        end_i = rates[self.grid_row, self.types]
        lam = end_i.copy()
        value = -float(cell_mass.sum())
        grad[self.sl_end] = -np.tensordot(cell_mass, self.endemic.X, axes=([0, 1], [0, 1]))

        if self.has_epidemic:
            ps, pt = theta[self.sl_siaf], theta[self.sl_tiaf]
            eta = self.eta(theta)
            f_pair = self.siaf.f(self.pair_dist, ps)
            g_pair = self.tiaf.g(self.pair_lag, pt)
            contrib = eta[self.pair_j] * f_pair * g_pair
            lam += np.bincount(self.pair_i, contrib, minlength=n)

        if np.any(~(lam > 0)):
            k = int(np.flatnonzero(~(lam > 0))[0])
            raise ValueError(f"invalid intensity {lam[k]} at event {k + 1} "
                             f"(time {self.times[k]}): log of zero")
        inv = 1.0 / lam
        value += float(np.log(lam).sum())
        grad[self.sl_end] += (end_i * inv) @ self.endemic.X[self.grid_row, self.types]

        if self.has_epidemic:
            F, dF = self.spatial_integrals(ps, tol)
            G, dG = self.temporal_integrals(theta)
            mass = eta * self.qsum * G * F
            value -= float(mass.sum())
            w = inv[self.pair_i]
            grad[self.sl_epi] = (np.bincount(self.pair_j, contrib * w, minlength=n) - mass) @ self.Z
            if self.siaf.n_params:
                df_pair = self.siaf.df(self.pair_dist, ps)
                grad[self.sl_siaf] = (df_pair * (eta[self.pair_j] * g_pair * w)).sum(axis=1) \
                    - dF @ (eta * self.qsum * G)
            if self.tiaf.n_params:
                dg_pair = self.tiaf.dg(self.pair_lag, pt)
                grad[self.sl_tiaf] = (dg_pair * (eta[self.pair_j] * f_pair * w)).sum(axis=1) \
                    - dG @ (eta * self.qsum * F)
        return value, grad

    def _check_ties(self) -> None:
        if self.has_epidemic and self.siaf.kind == "powerlaw" and \
                self.pattern.events.duplicated(["x", "y"]).any():
            raise ValueError("invalid pattern: events share coordinates and the power-law "
                             "kernel diverges at distance 0; apply untie() first "
                             f"(smallest positive separation {min_separation(self.pattern):.3g})")

    def default_start(self) -> np.ndarray:
        theta = np.zeros(self.n_params)
        n = self.pattern.n_events
        if f"h.{INTERCEPT}" in self.names:
            base = float((np.exp(self.endemic.log_offset)[:, None]
                          * self.endemic.exposure[:, None]).sum() * len(self.pattern.types))
            if n > 0 and base > 0:
                theta[self.names.index(f"h.{INTERCEPT}")] = math.log(n / base)
        if self.has_epidemic:
            theta[self.sl_siaf] = self.siaf.start()
            theta[self.sl_tiaf] = self.tiaf.start()
            if f"e.{INTERCEPT}" in self.names and n > 0:
                F, _ = self.spatial_integrals(theta[self.sl_siaf], self.tol, deriv=False)
                G, _ = self.temporal_integrals(theta)
                total = float((self.qsum * G * F).sum())
                if total > 0:
                    theta[self.names.index(f"e.{INTERCEPT}")] = math.log(
                        EPIDEMIC_START_SHARE * n / total)
        return theta

    def fit(self, start: Optional[Dict[str, float]] = None, warm: bool = True) -> TwinstimFit:
        """Maximize the likelihood; epidemic models start from the endemic-only fit."""
        try:
            self._check_ties()
            theta0 = self.default_start()
            if self.has_epidemic and warm:
                self.logger.info("fitting endemic-only model for the warm start")
                endemic_spec = self.spec.model_copy(update={"epidemic": None})
                warm_fit = TwinstimModel(endemic_spec, self.pattern, self.threads).fit()
                for name, value in zip(warm_fit.names, warm_fit.coefficients):
                    theta0[self.names.index(name)] = value
            theta0 = named_start(self.names, theta0, {**self.spec.start, **(start or {})})
        except Exception as e:
            self._handle_error("initialize twinstim fit", e)

        self.logger.info(f"fitting twinstim with {self.n_params} parameters on "
                         f"{self.pattern.n_events} events")
        self.tol = self.spec.cubatureTol
        try:
            result = maximize(self.loglik, theta0)
        except Exception as e:
            self._handle_error("fit twinstim model", e)
        self._log_result("twinstim", result)

        self.tol = self.spec.finalTol
        theta = result.par
        value, _ = self.loglik(theta)
        cov = self._covariance(theta)
        integrals = self.cached_integrals(theta)
        return TwinstimFit(
            names=self.names,
            coefficients=theta,
            cov=cov,
            loglik=value,
            converged=result.converged,
            iterations=result.iterations,
            message=result.message,
            n_obs=self.pattern.n_events,
            spec=self.spec,
            pattern=self.pattern,
            integrals=integrals,
            model=self,
        )

    def cached_integrals(self, theta: np.ndarray) -> Dict[str, np.ndarray]:
        if not self.has_epidemic:
            n = self.pattern.n_events
            return {"siaf": np.zeros(n), "tiaf": np.zeros(n)}
        F, _ = self.spatial_integrals(theta[self.sl_siaf], self.tol, deriv=False)
        G, _ = self.temporal_integrals(theta)
        return {"siaf": F, "tiaf": G}

    def locate(self, s: Sequence[float], t: float) -> int:
        """stgrid row of the cell containing (s, t)."""
        pattern = self.pattern
        if not (pattern.t0 < t <= pattern.T):
            raise ValueError(f"time {t} is outside ({pattern.t0}, {pattern.T}]")
        if not point_in_polygon(pattern.W, np.asarray(s, dtype=float)):
            raise ValueError(f"location {tuple(s)} is outside the observation window W")
        tile_ids = pattern.tile_ids
        if len(tile_ids) == 1:
            tile = tile_ids[0]
        elif pattern.tiles is None:
            raise ValueError("tile polygons not found; they are needed to locate a point")
        else:
            tile = next((k for k in tile_ids
                         if point_in_polygon(pattern.tiles[k], np.asarray(s, dtype=float))), None)
            if tile is None:
                raise ValueError(f"location {tuple(s)} is outside every tile")
        block = int(np.searchsorted(pattern.block_bounds[:, 1], t, side="left"))
        grid = pattern.stgrid
        rows = np.flatnonzero((grid["BLOCK"].to_numpy() == block) &
                              (grid["tile"].to_numpy() == tile))
        return int(rows[0])

    def intensity(self, theta: np.ndarray, s: Sequence[float], t: float, k: str) -> float:
        """lambda(s, t, k)."""
        if str(k) not in self.pattern.types:
            raise ValueError(f"type '{k}' not found in {list(self.pattern.types)}")
        kk = self.pattern.types.index(str(k))
        row = self.locate(s, t)
        value = float(self.endemic_rates(theta)[row, kk])
        if self.has_epidemic and self.pattern.n_events:
            dist = np.hypot(self.coords[:, 0] - s[0], self.coords[:, 1] - s[1])
            lag = t - self.times
            ok = (lag > 0) & (lag <= self.eps_t) & (dist <= self.eps_s) & \
                self.pattern.qmatrix[self.types, kk]
            if ok.any():
                eta = self.eta(theta)[ok]
                value += float(np.sum(eta * self.siaf.f(dist[ok], theta[self.sl_siaf])
                                      * self.tiaf.g(lag[ok], theta[self.sl_tiaf])))
        return value


def _model_and_theta(fit: Union[TwinstimFit, TwinstimModel],
                     coefficients: Optional[Coefficients]) -> Tuple[TwinstimModel, np.ndarray]:
    if isinstance(fit, TwinstimFit):
        model = fit.model
        theta = fit.coefficients if coefficients is None else model.vector(coefficients)
    else:
        if coefficients is None:
            raise ValueError("coefficients are required when evaluating a model without a fit")
        model = fit
        theta = model.vector(coefficients)
    return model, theta


def cif_twinstim(fit: Union[TwinstimFit, TwinstimModel], s: Sequence[float], t: float,
                 k: str, coefficients: Optional[Coefficients] = None) -> float:
    """Conditional intensity at location s, time t and type k."""
    model, theta = _model_and_theta(fit, coefficients)
    return model.intensity(theta, s, t, k)


def loglik_twinstim(spec: TwinstimSpec, coefficients: Coefficients,
                    pattern: PointPattern) -> Tuple[float, np.ndarray]:
    model = TwinstimModel(spec, pattern)
    return model.loglik(model.vector(coefficients))


def fit_twinstim(spec: TwinstimSpec, pattern: PointPattern,
                 start: Optional[Dict[str, float]] = None, threads: int = 1) -> TwinstimFit:
    return TwinstimModel(spec, pattern, threads).fit(start)


def r0_events(fit: TwinstimFit, coefficients: Optional[Coefficients] = None) -> np.ndarray:
    """Expected number of offspring per event: eta_j q_j int g int_{R_j} f."""
    model, theta = _model_and_theta(fit, coefficients)
    if not model.has_epidemic:
        return np.zeros(model.pattern.n_events)
    integrals = fit.integrals if coefficients is None else model.cached_integrals(theta)
    return model.eta(theta) * model.qsum * integrals["tiaf"] * integrals["siaf"]


def _block_rates(model: TwinstimModel, theta: np.ndarray) -> np.ndarray:
    """Endemic ground intensity (summed over tiles and types) per time block."""
    grid = model.pattern.stgrid
    rates = model.endemic_rates(theta).sum(axis=1) * grid["area"].to_numpy(dtype=float)
    return np.bincount(grid["BLOCK"].to_numpy(), rates,
                       minlength=len(model.pattern.block_bounds))


def cumulative_ground_intensity(fit: TwinstimFit, times: Sequence[float]) -> np.ndarray:
    """Lambda_g(t) = int_t0^t sum_k int_W lambda(s, u, k) ds du at each time."""
    model, theta = fit.model, fit.coefficients
    t = np.asarray(times, dtype=float)
    bounds = model.pattern.block_bounds
    per_block = _block_rates(model, theta)
    overlap = np.clip(np.minimum(t[:, None], bounds[None, :, 1]) - bounds[None, :, 0], 0, None)
    total = overlap @ per_block
    if model.has_epidemic and model.pattern.n_events:
        lag = np.clip(np.minimum(t[:, None] - model.times[None, :], model.eps_t[None, :]), 0, None)
        G = model.tiaf.G(lag, theta[model.sl_tiaf])
        weight = model.eta(theta) * model.qsum * fit.integrals["siaf"]
        total += G @ weight
    return total


def intensity_aggregate(fit: TwinstimFit, mode: str = "overTime",
                        resolution: int = 100) -> Union[pd.DataFrame, Dict[str, np.ndarray]]:
    """Ground intensity over time, or the accumulated epidemic proportion per pixel.

    ``overTime`` returns columns time, endemic, epidemic, total on an equally
    spaced grid over (t0, T]; ``overSpace`` returns pixel centers x, y and a
    resolution x resolution grid of epidemic proportions (NaN outside W).
    """
    if resolution < 2:
        raise ValueError(f"invalid resolution {resolution}: must be at least 2")
    model, theta = fit.model, fit.coefficients
    pattern = model.pattern
    if mode == "overTime":
        grid_t = np.linspace(pattern.t0, pattern.T, resolution)
        bounds = pattern.block_bounds
        block = np.clip(np.searchsorted(bounds[:, 1], grid_t, side="left"), 0, len(bounds) - 1)
        endemic = _block_rates(model, theta)[block]
        epidemic = np.zeros_like(grid_t)
        if model.has_epidemic and pattern.n_events:
            lag = grid_t[:, None] - model.times[None, :]
            active = (lag > 0) & (lag <= model.eps_t[None, :])
            g = np.where(active, model.tiaf.g(np.where(active, lag, 0.0), theta[model.sl_tiaf]), 0)
            epidemic = g @ (model.eta(theta) * model.qsum * fit.integrals["siaf"])
        return pd.DataFrame({"time": grid_t, "endemic": endemic, "epidemic": epidemic,
                             "total": endemic + epidemic})
    if mode != "overSpace":
        raise ValueError(f"invalid mode '{mode}': use overTime or overSpace")

    xmin, ymin, xmax, ymax = pattern.W.bbox
    xs = xmin + (np.arange(resolution) + 0.5) * (xmax - xmin) / resolution
    ys = ymin + (np.arange(resolution) + 0.5) * (ymax - ymin) / resolution
    gx, gy = np.meshgrid(xs, ys)
    points = np.column_stack([gx.ravel(), gy.ravel()])
    inside = np.asarray(point_in_polygon(pattern.W, points), dtype=bool)

    grid = pattern.stgrid
    rates = model.endemic_rates(theta).sum(axis=1) * (
        grid["stop"].to_numpy(dtype=float) - grid["start"].to_numpy(dtype=float))
    per_tile = pd.Series(rates).groupby(grid["tile"].to_numpy()).sum()
    endemic = np.zeros(len(points))
    tile_ids = pattern.tile_ids
    if len(tile_ids) == 1:
        endemic[:] = per_tile[tile_ids[0]]
    elif pattern.tiles is None:
        raise ValueError("tile polygons not found; overSpace needs them")
    else:
        for tile in tile_ids:
            hit = np.asarray(point_in_polygon(pattern.tiles[tile], points), dtype=bool)
            endemic[hit & (endemic == 0)] = per_tile[tile]

    epidemic = np.zeros(len(points))
    if model.has_epidemic and pattern.n_events:
        weight = model.eta(theta) * model.qsum * fit.integrals["tiaf"]
        dist = cdist(points, model.coords)
        near = dist <= model.eps_s[None, :]
        f = np.where(near, model.siaf.f(np.where(near, dist, 0.0), theta[model.sl_siaf]), 0.0)
        epidemic = f @ weight
    with np.errstate(invalid="ignore", divide="ignore"):
        share = epidemic / (endemic + epidemic)
    share = np.where(inside, share, np.nan)
    return {"x": xs, "y": ys, "proportion": share.reshape(resolution, resolution)}


def kernel_curve(fit: TwinstimFit, which: str, values: Sequence[float]) -> np.ndarray:
    """exp(e.(Intercept)) f(r) or g(t) on a grid of distances or lags."""
    model, theta = fit.model, fit.coefficients
    if not model.has_epidemic:
        raise ValueError("invalid request: the model has no epidemic component")
    scale = math.exp(fit.coef(f"e.{INTERCEPT}")) if f"e.{INTERCEPT}" in fit.names else 1.0
    x = np.asarray(values, dtype=float)
    if which == "siaf":
        return scale * model.siaf.f(x, theta[model.sl_siaf])
    if which == "tiaf":
        return scale * model.tiaf.g(x, theta[model.sl_tiaf])
    raise ValueError(f"invalid kernel '{which}': use siaf or tiaf")


def confint_twinstim(fit: ModelFit, name: str, level: float = 0.95) -> Tuple[float, float]:
    """Wald interval; kernel parameters are mapped to their natural scale."""
    if ".siaf." in name or ".tiaf." in name:
        return fit.wald(name, level, math.exp)
    return fit.wald(name, level)


def _irls_poisson(X: np.ndarray, y: np.ndarray, offset: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Poisson log-link regression by iteratively reweighted least squares."""
    beta = np.zeros(X.shape[1])
    if X.shape[1] and y.sum() > 0:
        beta = np.linalg.lstsq(X, np.log(np.maximum(y, 0.5)) - offset, rcond=None)[0]
    for _ in range(IRLS_MAX_ITERATIONS):
        eta = offset + X @ beta
        mu = np.exp(eta)
        z = eta - offset + (y - mu) / mu
        root = np.sqrt(mu)
        new = np.linalg.lstsq(root[:, None] * X, root * z, rcond=None)[0]
        if np.max(np.abs(new - beta)) < IRLS_TOLERANCE * (1 + np.max(np.abs(beta))):
            return new, True
        beta = new
    return beta, False


def glm_equivalence(spec: TwinstimSpec, pattern: PointPattern) -> Dict[str, Any]:
    """Compare the endemic-only fit with the equivalent Poisson regression on cell counts.

    Raises:
        ValueError: If the spec has an epidemic component
    """
    if spec.epidemic is not None:
        raise ValueError("invalid spec for the GLM comparison: it has an epidemic component")
    model = TwinstimModel(spec, pattern)
    design = model.endemic
    n_rows, K = design.X.shape[:2]
    counts = np.zeros((n_rows, K))
    np.add.at(counts, (model.grid_row, model.types), 1.0)
    if counts.sum() == 0:
        model.logger.warning("no events: the endemic intercept diverges to -inf")
        return {"identifiable": False, "agree": False, "table": pd.DataFrame(
            columns=["name", "twinstim", "glm", "difference"]), "maxAbsDifference": math.nan}

    X = design.X.reshape(n_rows * K, -1)
    offset = np.repeat(design.log_offset + np.log(design.exposure), K)
    glm_beta, glm_converged = _irls_poisson(X, counts.ravel(), offset)
    fit = model.fit()
    diff = fit.coefficients - glm_beta
    table = pd.DataFrame({"name": list(fit.names), "twinstim": fit.coefficients,
                          "glm": glm_beta, "difference": diff})
    max_diff = float(np.max(np.abs(diff))) if diff.size else 0.0
    return {
        "identifiable": bool(glm_converged and np.all(np.isfinite(glm_beta))),
        "agree": max_diff < 1e-6,
        "maxAbsDifference": max_diff,
        "table": table,
        "fit": fit,
    }


def _component_terms(spec: TwinstimSpec, component: str) -> List[str]:
    if component == "endemic":
        terms = list(spec.endemic.formulaTerms)
        if spec.endemic.trend is not None:
            terms.append("trend")
        if spec.endemic.season is not None:
            terms.append("season")
        return terms
    if spec.epidemic is None:
        return []
    return list(spec.epidemic.formulaTerms)


def _with_terms(spec: TwinstimSpec, component: str, drop: Optional[str] = None,
                add: Optional[str] = None) -> TwinstimSpec:
    if component == "endemic":
        endemic = spec.endemic.model_copy(deep=True)
        if drop == "trend":
            endemic.trend = None
        elif drop == "season":
            endemic.season = None
        elif drop is not None:
            endemic.formulaTerms = [t for t in endemic.formulaTerms if t != drop]
        if add is not None:
            endemic.formulaTerms = endemic.formulaTerms + [add]
        return spec.model_copy(update={"endemic": endemic})
    epidemic = spec.epidemic.model_copy(deep=True)
    if drop is not None:
        epidemic.formulaTerms = [t for t in epidemic.formulaTerms if t != drop]
    if add is not None:
        epidemic.formulaTerms = epidemic.formulaTerms + [add]
    return spec.model_copy(update={"epidemic": epidemic})


def step_select(fit: TwinstimFit, component: str = "endemic", direction: str = "backward",
                scope: Sequence[str] = ()) -> TwinstimFit:
    """Greedy AIC selection adding or dropping single terms of one component.

    Raises:
        ValueError: For an unknown component or direction, or when there is no
            term to add or drop
    """
    if component not in ("endemic", "epidemic"):
        raise ValueError(f"invalid component '{component}': use endemic or epidemic")
    if direction not in ("backward", "forward", "both"):
        raise ValueError(f"invalid direction '{direction}': use backward, forward or both")
    if component == "epidemic" and fit.spec.epidemic is None:
        raise ValueError("invalid component: the model has no epidemic component")
    logger = fit.model.logger
    current = fit
    history: List[Dict[str, Any]] = []
    while True:
        present = _component_terms(current.spec, component)
        candidates: List[Tuple[str, TwinstimSpec]] = []
        if direction in ("backward", "both"):
            candidates += [(f"- {t}", _with_terms(current.spec, component, drop=t))
                           for t in present]
        if direction in ("forward", "both"):
            candidates += [(f"+ {t}", _with_terms(current.spec, component, add=t))
                           for t in scope if t not in present]
        if not candidates and not history:
            raise ValueError(f"empty scope: no term to add or drop in the {component} component")
        best_label, best_fit = None, current
        for label, cand_spec in candidates:
            start = {n: v for n, v in zip(current.names, current.coefficients)}
            model = TwinstimModel(cand_spec, current.pattern, current.model.threads)
            cand = model.fit({k: v for k, v in start.items() if k in model.names}, warm=False)
            logger.info(f"step {label}: AIC {cand.aic:.2f} (current {current.aic:.2f})")
            if cand.aic < best_fit.aic:
                best_label, best_fit = label, cand
        history.append({"step": best_label or "<none>", "AIC": best_fit.aic})
        if best_label is None:
            break
        current = best_fit
    current.extra = {**current.extra, "selection": history}
    return current
