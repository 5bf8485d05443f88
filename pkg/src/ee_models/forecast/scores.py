"""
Proper scoring rules for count predictions and paired score comparisons.

Scores are negatively oriented: lower is better.
"""
import logging
import math
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from ..core.random import make_rng
from .predict import PredictiveDistribution

logger = logging.getLogger("ee-models.forecast")

SCORES = ("logs", "rps", "ses")
RPS_TAIL = 1e-10
RPS_SD_MULTIPLE = 20
MIN_PERMUTATIONS = 100


def log_score(pd_: PredictiveDistribution) -> np.ndarray:
    """-log P(Y = y)."""
    return -pd_.logpmf(pd_.observed)


def squared_error_score(pd_: PredictiveDistribution) -> np.ndarray:
    """(y - mu)^2."""
    return (pd_.observed - pd_.pred) ** 2


def ranked_probability_score(pd_: PredictiveDistribution) -> np.ndarray:
    """sum_k (P(Y <= k) - 1(y <= k))^2 over k >= 0.

    The sum runs to max(y, mu + 20 sd) and further until the remaining
    predictive tail mass is below 1e-10.
    """
    y = pd_.observed.ravel()
    mu = pd_.pred.ravel()
    sd = np.sqrt(pd_.variance().ravel())
    size = None if pd_.psi is None else pd_.size.ravel()
    out = np.empty(y.size)
    for n in range(y.size):
        dist = stats.poisson(mu[n]) if size is None else \
            stats.nbinom(size[n], size[n] / (size[n] + mu[n]))
        upper = int(max(y[n], math.ceil(mu[n] + RPS_SD_MULTIPLE * sd[n])))
        while dist.sf(upper) >= RPS_TAIL:
            upper *= 2
        k = np.arange(upper + 1)
        out[n] = float(np.sum((dist.cdf(k) - (y[n] <= k)) ** 2))
    return out.reshape(pd_.pred.shape)


SCORE_FUNCTIONS = {
    "logs": log_score,
    "rps": ranked_probability_score,
    "ses": squared_error_score,
}


def score_predictions(pd_: PredictiveDistribution,
                      which: Sequence[str] = SCORES) -> Dict[str, np.ndarray]:
    """Named (time x unit) score layers.

    Raises:
        ValueError: For an unknown score name
    """
    unknown = [w for w in which if w not in SCORE_FUNCTIONS]
    if unknown:
        raise ValueError(f"unknown score '{unknown[0]}': use one of {list(SCORES)}")
    return {w: SCORE_FUNCTIONS[w](pd_) for w in which}


def scores_frame(pd_: PredictiveDistribution, scores: Dict[str, np.ndarray]) -> pd.DataFrame:
    """Long format (unit, time, score, value)."""
    n_t, n_u = pd_.pred.shape
    frames = [pd.DataFrame({
        "unit": np.tile(np.asarray(pd_.unit_ids, dtype=object), n_t),
        "time": np.repeat(pd_.times, n_u),
        "score": name,
        "value": values.ravel(),
    }) for name, values in scores.items()]
    return pd.concat(frames, ignore_index=True)


def mean_scores(scores: Dict[str, np.ndarray], by: Optional[str] = None,
                pd_: Optional[PredictiveDistribution] = None) -> pd.DataFrame:
    """Mean scores overall, per unit or per time point."""
    if by is None:
        return pd.DataFrame({name: [float(v.mean())] for name, v in scores.items()})
    if pd_ is None:
        raise ValueError("averaging by unit or time needs the predictive distribution")
    if by == "unit":
        return pd.DataFrame({name: v.mean(axis=0) for name, v in scores.items()},
                            index=pd.Index(pd_.unit_ids, name="unit"))
    if by == "time":
        return pd.DataFrame({name: v.mean(axis=1) for name, v in scores.items()},
                            index=pd.Index(pd_.times, name="time"))
    raise ValueError(f"invalid grouping '{by}': use unit or time")


def permutation_test(
    scores_a: np.ndarray,
    scores_b: np.ndarray,
    n_permutations: int = 9999,
    seed: int = 0,
) -> Dict[str, float]:
    """Paired comparison of two score arrays.

    The permutation p-value comes from random sign flips of the paired
    differences; pT is the two-sided paired t-test.

    Raises:
        ValueError: On differing shapes or fewer than 100 permutations
    """
    a = np.asarray(scores_a, dtype=float)
    b = np.asarray(scores_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"score arrays differ in shape: {a.shape} vs {b.shape}")
    if n_permutations < MIN_PERMUTATIONS:
        raise ValueError(f"n_permutations must be at least {MIN_PERMUTATIONS}, "
                         f"got {n_permutations}")
    diffs = (a - b).ravel()
    diff_obs = float(diffs.mean())
    rng = make_rng(seed)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(n_permutations, diffs.size))
    permuted = np.abs(signs @ diffs / diffs.size)
    # ties within rounding count as extreme
    extreme = int(np.sum(permuted >= abs(diff_obs) - 1e-12 * max(1.0, abs(diff_obs))))
    p_permut = (1 + extreme) / (n_permutations + 1)
    if np.all(diffs == diffs[0]):
        p_t = 1.0 if diffs[0] == 0 else 0.0
    else:
        p_t = float(stats.ttest_1samp(diffs, 0.0).pvalue)
    logger.debug(f"permutation test: diffObs={diff_obs:.6g} pPermut={p_permut:.4g} pT={p_t:.4g}")
    return {"diffObs": diff_obs, "pVal.permut": p_permut, "pVal.t": p_t}
