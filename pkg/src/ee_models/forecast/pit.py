"""
Non-randomized probability integral transform for count predictions.

For an observation y with predictive CDF P, the PIT value is uniform on
[P(y - 1), P(y)] (a point mass at P(y) when the interval is empty).
Averaging these CDFs over all predictions and differencing at the bin
edges gives the histogram.
"""
import numpy as np

from .predict import PredictiveDistribution


def conditional_pit_cdf(u: float, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """F(u | y) = clamp((u - P(y - 1)) / (P(y) - P(y - 1)), 0, 1)."""
    width = upper - lower
    with np.errstate(divide="ignore", invalid="ignore"):
        ramp = np.clip((u - lower) / width, 0.0, 1.0)
    return np.where(width > 0, ramp, (u >= upper).astype(float))


def pit_histogram(pd_: PredictiveDistribution, n_bins: int = 10) -> np.ndarray:
    """Bin heights scaled so that calibrated predictions give height 1.

    Raises:
        ValueError: If n_bins < 2
    """
    if n_bins < 2:
        raise ValueError(f"n_bins must be at least 2, got {n_bins}")
    y = pd_.observed
    upper = pd_.cdf(y).ravel()
    lower = np.where(y > 0, pd_.cdf(y - 1), 0.0).ravel()
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    cdf = np.array([conditional_pit_cdf(u, lower, upper).mean() for u in edges])
    return n_bins * np.diff(cdf)
