"""
Multivariate endemic-epidemic model for count time series (hhh4).

Counts Y_it are negative binomial (or Poisson) with mean

    mu_it = e_it nu_it + lambda_it Y_i,t-1 + phi_it sum_j w_ji Y_j,t-1

and variance mu_it (1 + psi_i mu_it). Each of nu, lambda and phi is a
log-linear predictor. Coefficients are named by component ("ar.", "ne.",
"end."), followed by the neighbourhood-weight parameters ("neweights.") and
the log overdispersion ("overdisp"). Time indices are counted from 1.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import betaln, digamma, gammaln
from scipy.stats import norm

from ..config.models import ComponentSpec, HHH4Spec, WeightsSpec
from ..core.optim import maximize
from ..data.counts import CountSeries
from .base import LikelihoodModel, ModelFit, named_start
from .design import amplitude_shift, season_columns, season_names, term_values

COMPONENT_ORDER = ("ar", "ne", "end")
POWER_ITERATION_TOL = 1e-10
POWER_ITERATION_MAX = 100_000

Coefficients = Union[Mapping[str, float], np.ndarray, Sequence[float]]


@dataclass(frozen=True)
class ComponentDesign:
    """Log-linear predictor of one component: named T x U covariate grids and an offset."""

    component: str
    names: Tuple[str, ...]
    columns: Tuple[np.ndarray, ...]
    offset: np.ndarray

    @property
    def n_params(self) -> int:
        return len(self.names)

    def stacked(self) -> np.ndarray:
        if not self.columns:
            return np.zeros((0, *self.offset.shape))
        return np.stack(self.columns)

    def rate(self, beta: np.ndarray) -> np.ndarray:
        """offset * exp(X beta) over the whole grid."""
        return self.offset * np.exp(np.tensordot(beta, self.stacked(), axes=1))


def _time_grid(series: CountSeries) -> np.ndarray:
    return np.tile(np.arange(1, series.n_time + 1, dtype=float)[:, None], (1, series.n_units))


def add_season_terms(design: ComponentDesign, S: int, period: float) -> ComponentDesign:
    """Append sin(s w t), cos(s w t), s = 1..S, w = 2 pi / period, t from 1."""
    n_time, n_units = design.offset.shape
    time = np.arange(1, n_time + 1, dtype=float)
    columns = season_columns(time, S, period, "t")
    names = [f"{design.component}.{name}" for name in columns]
    grids = [np.tile(values[:, None], (1, n_units)) for values in columns.values()]
    return replace(design, names=design.names + tuple(names),
                   columns=design.columns + tuple(grids))


def build_component_design(component: str, spec: ComponentSpec,
                           series: CountSeries) -> ComponentDesign:
    """Design of one component; "t" and "pop" are always available as covariates."""
    variables: Dict[str, np.ndarray] = {"t": _time_grid(series), "pop": series.pop_frac}
    variables.update(series.covariates)
    names: List[str] = []
    columns: List[np.ndarray] = []
    shape = series.counts.shape
    if spec.intercept:
        names.append(f"{component}.1")
        columns.append(np.ones(shape))
    for term in spec.formulaTerms:
        values = term_values(term, variables)
        if values.shape != shape:
            raise ValueError(f"covariate of term '{term}' has shape {values.shape}, "
                             f"expected {shape}")
        names.append(f"{component}.{term}")
        columns.append(values)
    if spec.offset is None:
        offset = np.ones(shape)
    else:
        if spec.offset not in variables:
            raise ValueError(f"offset '{spec.offset}' not found among covariates")
        offset = np.asarray(variables[spec.offset], dtype=float)
        if np.any(offset < 0) or np.any(~np.isfinite(offset)):
            raise ValueError(f"invalid offset '{spec.offset}': values must be finite and >= 0")
    design = ComponentDesign(component, tuple(names), tuple(columns), offset)
    if spec.season is not None:
        design = add_season_terms(design, spec.season.S, spec.season.period)
    return design


def weight_param_names(spec: Optional[WeightsSpec]) -> List[str]:
    if spec is None or spec.kind == "firstOrder":
        return []
    if spec.kind == "powerLaw":
        return ["neweights.d"]
    return [f"neweights.{k}" for k in range(2, spec.maxlag + 1)]


def _raw_weights(spec: WeightsSpec, order: np.ndarray,
                 params: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unnormalized weights and their derivatives in the log-scale parameters."""
    o = np.asarray(order)
    n = o.shape[0]
    if spec.kind == "firstOrder":
        return (o == 1).astype(float), np.zeros((0, n, n))
    inside = (o >= 1) & (o <= spec.maxlag)
    if spec.kind == "powerLaw":
        d = float(params[0])
        if not d > 0:
            raise ValueError(f"invalid power-law decay d = {d}: must be positive")
        safe = np.where(inside, o, 1).astype(float)
        raw = np.where(inside, safe ** (-d), 0.0)
        return raw, (-d * np.log(safe) * raw)[None]
    heights = np.concatenate([[1.0], np.exp(np.asarray(params, dtype=float))])
    raw = np.where(inside, heights[np.clip(o - 1, 0, spec.maxlag - 1)], 0.0)
    deriv = np.stack([np.where(o == k, raw, 0.0) for k in range(2, spec.maxlag + 1)]) \
        if spec.maxlag > 1 else np.zeros((0, n, n))
    return raw, deriv


def neighbourhood_weights_with_deriv(
    spec: WeightsSpec, order: np.ndarray, params: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Weights w_ji (rows j) and their derivatives, row-normalized when requested.

    ``params`` are natural-scale d for powerLaw and omega_2..omega_maxlag for
    orderWeights; derivatives are with respect to log(d) and omega_k.
    """
    raw, draw = _raw_weights(spec, order, params)
    if not spec.normalize:
        return raw, draw
    sums = raw.sum(axis=1, keepdims=True)
    safe = np.where(sums > 0, sums, 1.0)
    weights = raw / safe
    dsums = draw.sum(axis=2, keepdims=True)
    dweights = (draw - weights[None] * dsums) / safe[None]
    return weights, dweights


def neighbourhood_weights(spec: WeightsSpec, order: np.ndarray,
                          params: Sequence[float] = ()) -> np.ndarray:
    """U x U weight grid w_ji for the given neighbourhood orders."""
    return neighbourhood_weights_with_deriv(spec, order, np.asarray(params, dtype=float))[0]


def _nb_loglik_terms(y: np.ndarray, mu: np.ndarray, size: np.ndarray):
    """Per-cell NB log-density with d/dmu and d/dsize; variance mu + mu^2/size."""
    r = size
    ypos = y > 0
    ysafe = np.where(ypos, y, 1.0)
    # log Gamma(y + r) - log Gamma(r) - y log r, accurate for large r
    pochhammer = np.where(ypos, gammaln(ysafe) - betaln(r, ysafe) - y * np.log(r), 0.0)
    ratio = mu / r
    with np.errstate(divide="ignore", invalid="ignore"):
        ylogmu = np.where(ypos, y * np.log(np.where(mu > 0, mu, 1.0)), 0.0)
        ylogmu = np.where(ypos & (mu <= 0), -np.inf, ylogmu)
        value = pochhammer + ylogmu - (y + r) * np.log1p(ratio) - gammaln(y + 1)
        dmu = np.where(ypos, y / mu, 0.0) - (y + r) / (r + mu)
    dsize = digamma(y + r) - digamma(r) - np.log1p(ratio) + (mu - y) / (r + mu)
    return value, dmu, dsize


def _poisson_loglik_terms(y: np.ndarray, mu: np.ndarray):
    ypos = y > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ylogmu = np.where(ypos, y * np.log(np.where(mu > 0, mu, 1.0)), 0.0)
        ylogmu = np.where(ypos & (mu <= 0), -np.inf, ylogmu)
        dmu = np.where(ypos, y / mu, 0.0) - 1.0
    return ylogmu - mu - gammaln(y + 1), dmu


def spectral_radius(matrix: np.ndarray) -> float:
    """Dominant eigenvalue of a nonnegative matrix by power iteration on matrix + I."""
    n = matrix.shape[0]
    if n == 0:
        return 0.0
    shifted = matrix + np.eye(n)
    v = np.full(n, 1.0 / n)
    estimate = 1.0
    for _ in range(POWER_ITERATION_MAX):
        w = shifted @ v
        norm_w = float(np.abs(w).sum())
        w /= norm_w
        if abs(norm_w - estimate) < POWER_ITERATION_TOL and \
                np.abs(w - v).max() < POWER_ITERATION_TOL:
            return max(norm_w - 1.0, 0.0)
        v, estimate = w, norm_w
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


@dataclass(kw_only=True)
class HHH4Fit(ModelFit):
    """Fitted hhh4 model with fitted mean and component grids (T x U).

    Row 1 has no lagged counts, so its epidemic components are zero.
    """

    spec: HHH4Spec
    data: CountSeries
    fitted_mean: np.ndarray
    components: Dict[str, np.ndarray]
    subset: Tuple[int, int]
    model: "HHH4Model" = field(repr=False)


class HHH4Model(LikelihoodModel):
    """hhh4 likelihood over the fitted subset of a CountSeries.

    Parameter vector layout: ar, ne, end coefficients, neighbourhood-weight
    parameters (log scale), log overdispersion (one per unit for NegBinM).
    """

    def __init__(self, spec: HHH4Spec, data: CountSeries):
        super().__init__()
        self.spec = spec
        self.data = data
        try:
            self.designs = {name: build_component_design(name, comp, data)
                            for name, comp in spec.components().items()}
        except Exception as e:
            self._handle_error("build hhh4 design", e)
        self.weights_spec = spec.ne.weights if spec.ne is not None else None

        names: List[str] = []
        self.slices: Dict[str, slice] = {}
        for comp in COMPONENT_ORDER:
            if comp in self.designs:
                self.slices[comp] = slice(len(names), len(names) + self.designs[comp].n_params)
                names.extend(self.designs[comp].names)
        weight_names = weight_param_names(self.weights_spec)
        self.slices["neweights"] = slice(len(names), len(names) + len(weight_names))
        names.extend(weight_names)
        if spec.family == "NegBin1":
            overdisp = ["overdisp"]
        elif spec.family == "NegBinM":
            overdisp = [f"overdisp.{u}" for u in data.unit_ids]
        else:
            overdisp = []
        self.slices["overdisp"] = slice(len(names), len(names) + len(overdisp))
        names.extend(overdisp)
        self.names = tuple(names)

        n_time = data.n_time
        first, last = spec.subset or (2, n_time)
        if last > n_time:
            self._handle_error("select hhh4 subset", ValueError(
                f"subset ({first}, {last}) outside the time range 1..{n_time}"))
        self.subset = (int(first), int(last))
        self.rows = np.arange(first - 1, last)
        self.y = data.counts.astype(float)
        self.ylag = np.vstack([np.zeros((1, data.n_units)), self.y[:-1]])

    @property
    def n_params(self) -> int:
        return len(self.names)

    def vector(self, coefficients: Coefficients) -> np.ndarray:
        """Coefficient vector from a name mapping (all names required) or a sequence."""
        if isinstance(coefficients, Mapping):
            missing = [n for n in self.names if n not in coefficients]
            if missing:
                raise ValueError(f"coefficient '{missing[0]}' not found in the given values")
            return named_start(self.names, np.zeros(self.n_params), coefficients)
        theta = np.asarray(coefficients, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} coefficients, got {theta.shape}")
        return theta

    def default_start(self) -> np.ndarray:
        theta = np.zeros(self.n_params)
        if "end" in self.designs and "end.1" in self.names:
            rows = self.rows
            mean_y = float(self.y[rows].mean())
            mean_offset = float(self.designs["end"].offset[rows].mean())
            if mean_y > 0 and mean_offset > 0:
                theta[self.names.index("end.1")] = math.log(mean_y / mean_offset)
        if self.weights_spec is not None and self.weights_spec.kind == "powerLaw":
            theta[self.names.index("neweights.d")] = math.log(self.weights_spec.d)
        return theta

    def weight_matrix(self, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n = self.data.n_units
        if self.weights_spec is None:
            return np.zeros((n, n)), np.zeros((0, n, n))
        params = theta[self.slices["neweights"]]
        if self.weights_spec.kind == "powerLaw":
            params = np.exp(params)
        return neighbourhood_weights_with_deriv(self.weights_spec, self.data.nb_order, params)

    def rates(self, theta: np.ndarray) -> Dict[str, np.ndarray]:
        """nu (times offset), lambda and phi grids of the active components."""
        return {comp: design.rate(theta[self.slices[comp]])
                for comp, design in self.designs.items()}

    def components(self, theta: np.ndarray) -> Dict[str, np.ndarray]:
        """Endemic, autoregressive and neighbourhood parts of the mean (T x U)."""
        rates = self.rates(theta)
        zeros = np.zeros_like(self.y)
        W, _ = self.weight_matrix(theta)
        return {
            "endemic": rates.get("end", zeros),
            "ar": rates["ar"] * self.ylag if "ar" in rates else zeros,
            "ne": rates["ne"] * (self.ylag @ W) if "ne" in rates else zeros,
        }

    def mean_at(self, theta: np.ndarray, t: int, y_prev: np.ndarray) -> np.ndarray:
        """mu_.t given the counts at t - 1 (t counted from 1)."""
        row = t - 1
        y_prev = np.asarray(y_prev, dtype=float)
        mu = np.zeros(self.data.n_units)
        for comp, design in self.designs.items():
            beta = theta[self.slices[comp]]
            eta = np.tensordot(beta, design.stacked()[:, row], axes=1) if beta.size else 0.0
            rate = design.offset[row] * np.exp(eta)
            if comp == "end":
                mu += rate
            elif comp == "ar":
                mu += rate * y_prev
            else:
                mu += rate * (y_prev @ self.weight_matrix(theta)[0])
        return mu

    def size(self, theta: np.ndarray) -> Optional[np.ndarray]:
        """NB size 1/psi per unit; None for Poisson."""
        psi = theta[self.slices["overdisp"]]
        if psi.size == 0:
            return None
        return np.broadcast_to(np.exp(-psi), (self.data.n_units,)).copy()

    def epidemic_matrix(self, theta: np.ndarray, t: int) -> np.ndarray:
        """Lambda_t with diagonal lambda_it and off-diagonal phi_it w_ji."""
        n = self.data.n_units
        row = t - 1
        rates = self.rates(theta)
        lam = rates["ar"][row] if "ar" in rates else np.zeros(n)
        matrix = np.diag(lam)
        if "ne" in rates:
            W, _ = self.weight_matrix(theta)
            matrix = matrix + rates["ne"][row][:, None] * W.T
        return matrix

    def loglik(self, theta: np.ndarray) -> Tuple[float, np.ndarray]:
        theta = np.asarray(theta, dtype=float)
        rows = self.rows
        rates = self.rates(theta)
        W, dW = self.weight_matrix(theta)
        parts: Dict[str, np.ndarray] = {}
        if "end" in rates:
            parts["end"] = rates["end"][rows]
        if "ar" in rates:
            parts["ar"] = rates["ar"][rows] * self.ylag[rows]
        if "ne" in rates:
            parts["ne"] = rates["ne"][rows] * (self.ylag[rows] @ W)
        mu = sum(parts.values())
        if not np.all(np.isfinite(mu)):
            t, i = np.argwhere(~np.isfinite(mu))[0]
            raise ValueError(f"invalid (non-finite) mean at time {rows[t] + 1}, "
                             f"unit {self.data.unit_ids[i]}")
        y = self.y[rows]
        size = self.size(theta)
        grad = np.zeros(self.n_params)
        if size is None:
            terms, dmu = _poisson_loglik_terms(y, mu)
        else:
            terms, dmu, dsize = _nb_loglik_terms(y, mu, size[None, :])
            # d/dlog(psi) = -size * d/dsize
            dlogpsi = -size[None, :] * dsize
            sl = self.slices["overdisp"]
            grad[sl] = dlogpsi.sum() if self.spec.family == "NegBin1" else dlogpsi.sum(axis=0)
        for comp, part in parts.items():
            X = self.designs[comp].stacked()[:, rows]
            grad[self.slices[comp]] = np.tensordot(X, dmu * part, axes=([1, 2], [0, 1]))
        if dW.shape[0]:
            phi = rates["ne"][rows]
            ylag = self.ylag[rows]
            grad[self.slices["neweights"]] = [
                float(np.sum(dmu * phi * (ylag @ dWk))) for dWk in dW]
        return float(terms.sum()), grad

    def _zero_units(self) -> List[int]:
        if self.spec.family != "NegBinM":
            return []
        totals = self.y[self.rows].sum(axis=0)
        return [int(i) for i in np.flatnonzero(totals == 0)]

    def fit(self, start: Optional[Dict[str, float]] = None) -> HHH4Fit:
        """Maximize the likelihood; NegBinM units without counts keep psi_i fixed."""
        theta0 = named_start(self.names, self.default_start(), start)
        fixed_idx = [self.slices["overdisp"].start + i for i in self._zero_units()]
        for k in fixed_idx:
            self.logger.warning(f"unit {self.names[k].split('.', 1)[1]} has only zero counts; "
                                f"{self.names[k]} kept at its start value")
        free = [k for k in range(self.n_params) if k not in fixed_idx]

        def objective(sub: np.ndarray) -> Tuple[float, np.ndarray]:
            theta = theta0.copy()
            theta[free] = sub
            value, grad = self.loglik(theta)
            return value, grad[free]

        self.logger.info(f"fitting hhh4 ({self.spec.family}) with {len(free)} parameters "
                         f"on times {self.subset[0]}..{self.subset[1]}")
        try:
            result = maximize(objective, theta0[free])
        except Exception as e:
            self._handle_error("fit hhh4 model", e)
        self._log_result("hhh4", result)

        theta = theta0.copy()
        theta[free] = result.par
        cov = self._covariance(theta, free)
        comps = self.components(theta)
        return HHH4Fit(
            names=self.names,
            coefficients=theta,
            cov=cov,
            loglik=result.loglik,
            converged=result.converged,
            iterations=result.iterations,
            message=result.message,
            n_obs=int(self.rows.size * self.data.n_units),
            fixed=tuple(self.names[k] for k in fixed_idx),
            extra={"family": self.spec.family},
            spec=self.spec,
            data=self.data,
            fitted_mean=comps["endemic"] + comps["ar"] + comps["ne"],
            components=comps,
            subset=self.subset,
            model=self,
        )


def mean_hhh4(spec: HHH4Spec, coefficients: Coefficients, data: CountSeries, t: int,
              Y: Optional[np.ndarray] = None) -> np.ndarray:
    """mu_.t for t >= 2, using counts ``Y`` (default: the observed counts) at t - 1."""
    if t < 2 or t > data.n_time:
        raise ValueError(f"invalid time {t}: the mean needs lag-1 counts, "
                         f"so 2 <= t <= {data.n_time}")
    model = HHH4Model(spec, data)
    counts = data.counts if Y is None else np.asarray(Y)
    return model.mean_at(model.vector(coefficients), t, counts[t - 2])


def loglik_hhh4(spec: HHH4Spec, coefficients: Coefficients,
                data: CountSeries) -> Tuple[float, np.ndarray]:
    model = HHH4Model(spec, data)
    return model.loglik(model.vector(coefficients))


def fit_hhh4(spec: HHH4Spec, data: CountSeries,
             start: Optional[Dict[str, float]] = None) -> HHH4Fit:
    return HHH4Model(spec, data).fit(start)


def fitted_components(fit: HHH4Fit) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Endemic, autoregressive and neighbourhood grids; they sum to the fitted mean."""
    return fit.components["endemic"], fit.components["ar"], fit.components["ne"]


def _natural_scale(name: str) -> bool:
    return name.startswith("overdisp") or name == "neweights.d"


def confint_wald(fit: ModelFit, name: str, level: float = 0.95,
                 transform: Optional[Callable[[float], float]] = None) -> Tuple[float, float]:
    """Wald interval; overdisp and neweights.d are reported on their natural scale.

    Natural-scale intervals use the delta method: exp(b) +- q exp(b) se(b).
    """
    if _natural_scale(name) and transform is None:
        if not 0 < level < 1:
            raise ValueError(f"level must be in (0, 1), got {level}")
        k = fit.index(name)
        q = norm.ppf(0.5 + level / 2)
        est = math.exp(fit.coefficients[k])
        se = est * float(fit.se[k])
        return est - q * se, est + q * se
    return fit.wald(name, level, transform)


def max_ev_series(fit: HHH4Fit) -> np.ndarray:
    """Dominant eigenvalue of Lambda_t at every fitted time point."""
    theta = fit.coefficients
    return np.array([spectral_radius(fit.model.epidemic_matrix(theta, t))
                     for t in range(fit.subset[0], fit.subset[1] + 1)])


def _season_pairs(fit: HHH4Fit, component: str) -> List[Tuple[str, str, str]]:
    comp = {"endemic": "end"}.get(component, component)
    spec = fit.spec.components().get(comp)
    if spec is None or spec.season is None:
        return []
    names = season_names(spec.season.S, spec.season.period, "t")
    pairs = []
    for s in range(spec.season.S):
        sin_name, cos_name = names[2 * s], names[2 * s + 1]
        label = sin_name[len("sin("):-1]
        pairs.append((f"{comp}.{sin_name}", f"{comp}.{cos_name}", f"{comp}.%s({label})"))
    return pairs


def summarize_hhh4(
    fit: HHH4Fit,
    idx2Exp: Union[bool, Sequence[str], None] = None,
    amplitudeShift: bool = False,
    maxEV: bool = False,
) -> Dict[str, object]:
    """Coefficient report with optional exp transform, amplitude/shift and maxEV.

    Standard errors of transformed quantities use the delta method.
    """
    est = fit.coefficients
    cov = fit.cov
    se = fit.se
    if idx2Exp is True:
        to_exp = {n for n in fit.names if not _natural_scale(n)}
    else:
        to_exp = set(idx2Exp or ())
    unknown = to_exp - set(fit.names)
    if unknown:
        raise ValueError(f"coefficient '{sorted(unknown)[0]}' not found")

    rows: List[Dict[str, float]] = []
    replaced: Dict[str, List[Dict[str, float]]] = {}
    if amplitudeShift:
        for comp in ("end", "ar", "ne"):
            for sin_name, cos_name, pattern in _season_pairs(fit, comp):
                i, j = fit.index(sin_name), fit.index(cos_name)
                A, phi = amplitude_shift(est[i], est[j])
                if A > 0:
                    jac_a = np.array([est[i] / A, est[j] / A])
                    jac_s = np.array([-est[j] / A ** 2, est[i] / A ** 2])
                else:
                    jac_a = jac_s = np.zeros(2)
                sub = cov[np.ix_([i, j], [i, j])]
                replaced[sin_name] = [
                    {"name": pattern % "A", "estimate": A,
                     "se": float(np.sqrt(max(jac_a @ sub @ jac_a, 0.0)))},
                    {"name": pattern % "s", "estimate": phi,
                     "se": float(np.sqrt(max(jac_s @ sub @ jac_s, 0.0)))},
                ]
                replaced[cos_name] = []
    for k, name in enumerate(fit.names):
        if name in replaced:
            rows.extend(replaced[name])
        elif _natural_scale(name):
            value = math.exp(est[k])
            rows.append({"name": name, "estimate": value, "se": value * se[k]})
        elif name in to_exp:
            value = math.exp(est[k])
            rows.append({"name": f"exp({name})", "estimate": value, "se": value * se[k]})
        else:
            rows.append({"name": name, "estimate": float(est[k]), "se": float(se[k])})

    report: Dict[str, object] = {
        "coefficients": pd.DataFrame(rows, columns=["name", "estimate", "se"]),
        "logLik": fit.loglik,
        "aic": fit.aic,
        "bic": fit.bic,
        "df": fit.df,
        "nobs": fit.n_obs,
        "converged": fit.converged,
    }
    if maxEV:
        series = max_ev_series(fit)
        report["maxEV"] = float(series.max()) if series.size else 0.0
        report["maxEV_series"] = series
    return report


def season_effect(fit: HHH4Fit, component: str = "end") -> np.ndarray:
    """Multiplicative seasonal effect exp(sum_s gamma_s sin + delta_s cos) over one period."""
    comp = {"endemic": "end"}.get(component, component)
    spec = fit.spec.components().get(comp)
    if spec is None:
        raise ValueError(f"component '{component}' not found in the model")
    if spec.season is None:
        return np.ones(1)
    period = spec.season.period
    time = np.arange(1, int(round(period)) + 1, dtype=float)
    columns = season_columns(time, spec.season.S, period, "t")
    eta = sum(fit.coef(f"{comp}.{name}") * values for name, values in columns.items())
    return np.exp(eta)
