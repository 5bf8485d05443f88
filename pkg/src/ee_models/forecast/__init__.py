"""
Prediction, scoring, calibration and residual diagnostics.
"""

from .pit import conditional_pit_cdf, pit_histogram
from .predict import PredictiveDistribution, one_step_ahead, predictions_frame, read_predictions
from .residuals import ResidualProcess, ks_band, residual_transform
from .scores import (
    SCORES,
    mean_scores,
    permutation_test,
    ranked_probability_score,
    score_predictions,
    scores_frame,
)

__all__ = [
    "PredictiveDistribution",
    "ResidualProcess",
    "SCORES",
    "conditional_pit_cdf",
    "ks_band",
    "mean_scores",
    "one_step_ahead",
    "permutation_test",
    "pit_histogram",
    "predictions_frame",
    "ranked_probability_score",
    "read_predictions",
    "residual_transform",
    "score_predictions",
    "scores_frame",
]
