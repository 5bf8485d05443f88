"""
Forward simulation from fitted hhh4 models.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config.models import SimConfig
from ..core.parallel import parallel_map
from ..core.random import replicate_streams
from ..models.hhh4 import HHH4Fit

logger = logging.getLogger("ee-models.simulation")


@dataclass(frozen=True)
class HHH4Simulation:
    """Simulated counts (time x unit x replicate) over 1-based ``times``."""

    counts: np.ndarray
    times: np.ndarray
    final_sizes: np.ndarray
    unit_ids: tuple


def draw_counts(mu: np.ndarray, size: Optional[np.ndarray], rng: np.random.Generator) -> np.ndarray:
    """NB(mu, size) or Poisson(mu) counts; mu = 0 gives 0."""
    mu = np.maximum(mu, 0.0)
    if size is None:
        return rng.poisson(mu)
    return rng.negative_binomial(size, size / (size + mu))


def simulate_hhh4(fit: HHH4Fit, config: SimConfig,
                  y_start: Optional[np.ndarray] = None) -> HHH4Simulation:
    """Sequential simulation plugging simulated counts into the lag-1 mean.

    The window is ``config.subset`` (default: the fitted subset). Counts
    before the window come from ``y_start``/``config.yStart``, falling back
    to the observed counts.

    Raises:
        ValueError: If no start counts are available or have the wrong length
    """
    model = fit.model
    data = fit.data
    first, last = config.subset or fit.subset
    if not 1 <= first <= last <= data.n_time:
        raise ValueError(f"invalid subset ({first}, {last}) for {data.n_time} time points")
    start = y_start if y_start is not None else config.yStart
    if start is None:
        if first < 2:
            raise ValueError("y.start is missing: the window starts at time 1 "
                             "so no observed counts precede it")
        start = data.counts[first - 2]
    start = np.asarray(start, dtype=float)
    if start.shape != (data.n_units,):
        raise ValueError(f"y.start has {start.size} entries for {data.n_units} units")

    theta = fit.coefficients
    size = model.size(theta)
    times = np.arange(first, last + 1)

    def one(rng: np.random.Generator) -> np.ndarray:
        out = np.zeros((len(times), data.n_units), dtype=np.int64)
        prev = start
        for k, t in enumerate(times):
            out[k] = draw_counts(model.mean_at(theta, int(t), prev), size, rng)
            prev = out[k]
        return out

    logger.info(f"simulating {config.nsim} hhh4 paths over times {first}..{last}")
    paths = parallel_map(one, replicate_streams(config.seed, config.nsim), config.threads)
    counts = np.stack(paths, axis=2)
    return HHH4Simulation(counts=counts, times=times,
                          final_sizes=counts.sum(axis=(0, 1)), unit_ids=data.unit_ids)
