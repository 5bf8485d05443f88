"""
One-step-ahead predictive distributions of hhh4 models.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from ..core.parallel import parallel_map
from ..models.hhh4 import HHH4Fit, HHH4Model

logger = logging.getLogger("ee-models.forecast")

REFIT_ERRORS = (RuntimeError, ValueError, FloatingPointError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class PredictiveDistribution:
    """Negative binomial (or Poisson) one-step-ahead predictions.

    ``pred`` and ``observed`` are (prediction time x unit) grids. ``psi`` is
    log(1/overdispersion), so the NB size is exp(psi); it is None for
    Poisson predictions. ``failed`` lists prediction times whose refit failed
    and reused the previous coefficients.
    """

    pred: np.ndarray
    observed: np.ndarray
    psi: Optional[np.ndarray]
    times: np.ndarray
    unit_ids: Tuple[str, ...]
    family: str
    type: str = "final"
    failed: Tuple[int, ...] = ()
    coefficients: Optional[pd.DataFrame] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.pred.shape != self.observed.shape:
            raise ValueError(f"predictions {self.pred.shape} and observations "
                             f"{self.observed.shape} differ in shape")
        if np.any(~(self.pred > 0)):
            t, i = np.argwhere(~(self.pred > 0))[0]
            raise ValueError(f"invalid predictive mean {self.pred[t, i]} at time "
                             f"{self.times[t]}, unit {self.unit_ids[i]}")
        if self.psi is not None and self.psi.shape != self.pred.shape:
            raise ValueError(f"psi has shape {self.psi.shape}, expected {self.pred.shape}")

    @property
    def size(self) -> Optional[np.ndarray]:
        return None if self.psi is None else np.exp(self.psi)

    def _dist(self):
        if self.psi is None:
            return stats.poisson(self.pred)
        size = self.size
        return stats.nbinom(size, size / (size + self.pred))

    def cdf(self, k: np.ndarray) -> np.ndarray:
        """P(Y <= k) elementwise; 0 for k < 0."""
        return self._dist().cdf(k)

    def logpmf(self, k: np.ndarray) -> np.ndarray:
        return self._dist().logpmf(k)

    def variance(self) -> np.ndarray:
        if self.psi is None:
            return self.pred.copy()
        return self.pred * (1 + self.pred / self.size)


def _predict(model: HHH4Model, theta: np.ndarray,
             t: int) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Mean and log size at time t given the observed counts at t - 1."""
    mu = model.mean_at(theta, t, model.data.counts[t - 2])
    size = model.size(theta)
    return mu, None if size is None else np.log(size)


def one_step_ahead(
    fit: HHH4Fit,
    tp: Tuple[int, int],
    type: Literal["final", "rolling"] = "final",
    threads: int = 1,
) -> PredictiveDistribution:
    """Predict times tp[0] + 1 ... tp[1] + 1 one step ahead.

    ``final`` uses the full-data fit, so predictions equal the fitted means.
    ``rolling`` refits on the data up to each t (warm-started from the full
    fit) before predicting t + 1.

    Raises:
        ValueError: If tp is outside the series or an unknown type is given
    """
    first, last = tp
    data = fit.data
    if not 1 <= first <= last or last + 1 > data.n_time:
        raise ValueError(f"invalid tp ({first}, {last}): predictions need 1 <= from <= to "
                         f"and to + 1 <= {data.n_time}")
    if type not in ("final", "rolling"):
        raise ValueError(f"invalid prediction type '{type}': use final or rolling")
    model = fit.model
    steps = list(range(first, last + 1))
    failed: List[int] = []

    if type == "final":
        thetas = [fit.coefficients] * len(steps)
    else:
        fit_start = fit.subset[0]
        if first < fit_start:
            raise ValueError(f"invalid tp: rolling refits need from >= {fit_start}, "
                             "the start of the fitted subset")
        start = dict(zip(fit.names, fit.coefficients))

        def refit(t: int) -> Optional[np.ndarray]:
            spec = fit.spec.model_copy(update={"subset": (fit_start, t)})
            try:
                refitted = HHH4Model(spec, data).fit(start)
            except REFIT_ERRORS as e:
                logger.warning(f"refit up to time {t} failed: {e}")
                return None
            if not refitted.converged:
                logger.warning(f"refit up to time {t} did not converge: {refitted.message}")
                return None
            return refitted.coefficients

        results = parallel_map(refit, steps, threads)
        thetas = []
        previous = fit.coefficients
        for t, theta in zip(steps, results):
            if theta is None:
                failed.append(t + 1)
                theta = previous
            thetas.append(theta)
            previous = theta
        if failed:
            logger.warning(f"{len(failed)} rolling refits failed; previous coefficients "
                           f"reused for times {failed}")

    means, log_sizes = [], []
    for t, theta in zip(steps, thetas):
        mu, log_size = _predict(model, theta, t + 1)
        means.append(mu)
        log_sizes.append(log_size)
    times = np.array(steps) + 1
    psi = None if log_sizes[0] is None else np.vstack(log_sizes)
    return PredictiveDistribution(
        pred=np.vstack(means),
        observed=data.counts[times - 1].astype(float),
        psi=psi,
        times=times,
        unit_ids=tuple(data.unit_ids),
        family=fit.spec.family,
        type=type,
        failed=tuple(failed),
        coefficients=pd.DataFrame(np.vstack(thetas), index=times, columns=list(fit.names)),
    )


def read_predictions(frame: pd.DataFrame) -> PredictiveDistribution:
    """PredictiveDistribution from long format (time, unit, observed, pred[, psi])."""
    missing = [c for c in ("time", "unit", "observed", "pred") if c not in frame.columns]
    if missing:
        raise ValueError(f"predictions are missing column '{missing[0]}'")
    frame = frame.assign(unit=frame["unit"].astype(str))
    times = np.array(sorted(pd.unique(frame["time"])), dtype=np.int64)
    units = tuple(pd.unique(frame["unit"]))

    def grid(column: str) -> np.ndarray:
        wide = frame.pivot(index="time", columns="unit", values=column)
        wide = wide.reindex(index=times, columns=list(units))
        if wide.isna().to_numpy().any():
            raise ValueError(f"predictions do not cover every (time, unit) pair in '{column}'")
        return wide.to_numpy(dtype=float)

    has_psi = "psi" in frame.columns and frame["psi"].notna().all()
    return PredictiveDistribution(
        pred=grid("pred"),
        observed=grid("observed"),
        psi=grid("psi") if has_psi else None,
        times=times,
        unit_ids=units,
        family="NegBin" if has_psi else "Poisson",
    )


def predictions_frame(pd_: PredictiveDistribution) -> pd.DataFrame:
    """Long format (time, unit, observed, pred, psi) of a predictive distribution."""
    n_t, n_u = pd_.pred.shape
    out = pd.DataFrame({
        "time": np.repeat(pd_.times, n_u),
        "unit": np.tile(np.asarray(pd_.unit_ids, dtype=object), n_t),
        "observed": pd_.observed.ravel().astype(np.int64),
        "pred": pd_.pred.ravel(),
    })
    if pd_.psi is not None:
        out["psi"] = pd_.psi.ravel()
    return out
