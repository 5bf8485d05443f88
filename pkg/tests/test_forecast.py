"""
Tests for one-step-ahead prediction, scoring rules, PIT and residuals.
"""

import math

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from ee_models.config.models import ComponentSpec, HHH4Spec
from ee_models.forecast import (
    PredictiveDistribution,
    conditional_pit_cdf,
    ks_band,
    mean_scores,
    one_step_ahead,
    permutation_test,
    pit_histogram,
    predictions_frame,
    ranked_probability_score,
    read_predictions,
    residual_transform,
    score_predictions,
    scores_frame,
)
from ee_models.models import fit_hhh4
from ee_models.models.hhh4 import HHH4Model


def poisson_predictions(pred, observed):
    pred = np.asarray(pred, dtype=float).reshape(-1, 1)
    observed = np.asarray(observed, dtype=float).reshape(-1, 1)
    return PredictiveDistribution(pred=pred, observed=observed, psi=None,
                                  times=np.arange(1, len(pred) + 1), unit_ids=("1",),
                                  family="Poisson")


@pytest.fixture
def negbin_fit(count_series):
    spec = HHH4Spec(family="NegBin1", endemic=ComponentSpec(), ar=ComponentSpec(),
                    ne=ComponentSpec())
    return fit_hhh4(spec, count_series)


def test_log_score_poisson():
    scores = score_predictions(poisson_predictions([1.0], [0]), ["logs"])
    assert scores["logs"][0, 0] == pytest.approx(1.0)


def test_squared_error_at_the_mean():
    scores = score_predictions(poisson_predictions([3.0], [3]), ["ses"])
    assert scores["ses"][0, 0] == 0.0


def test_rps_matches_direct_sum():
    dist = stats.poisson(1.5)
    k = np.arange(200)
    expected = np.sum((dist.cdf(k) - (2 <= k)) ** 2)
    rps = ranked_probability_score(poisson_predictions([1.5], [2]))
    assert rps[0, 0] == pytest.approx(expected, rel=1e-10)


def test_rps_for_large_observation():
    """The sum reaches past an observation far in the tail."""
    dist = stats.poisson(1.0)
    k = np.arange(200)
    expected = np.sum((dist.cdf(k) - (60 <= k)) ** 2)
    rps = ranked_probability_score(poisson_predictions([1.0], [60]))
    assert rps[0, 0] == pytest.approx(expected, rel=1e-10)


def test_unknown_score():
    with pytest.raises(ValueError, match="unknown score 'crps'"):
        score_predictions(poisson_predictions([1.0], [0]), ["crps"])


def test_invalid_predictive_mean():
    with pytest.raises(ValueError, match="invalid predictive mean"):
        poisson_predictions([0.0], [0])


def test_final_predictions_are_fitted_values(negbin_fit):
    pred = one_step_ahead(negbin_fit, (100, 119))
    assert list(pred.times) == list(range(101, 121))
    np.testing.assert_allclose(pred.pred, negbin_fit.fitted_mean[100:120])
    np.testing.assert_allclose(pred.psi, -negbin_fit.coef("overdisp"))


def test_log_scores_sum_to_negative_loglik(negbin_fit, count_series):
    pred = one_step_ahead(negbin_fit, (100, 119))
    logs = score_predictions(pred, ["logs"])["logs"]
    window = HHH4Model(negbin_fit.spec.model_copy(update={"subset": (101, 120)}), count_series)
    value, _ = window.loglik(negbin_fit.coefficients)
    assert logs.sum() == pytest.approx(-value, rel=1e-9)


def test_rolling_predictions(negbin_fit):
    pred = one_step_ahead(negbin_fit, (116, 119), type="rolling")
    assert pred.type == "rolling"
    assert pred.failed == ()
    assert list(pred.coefficients.index) == [117, 118, 119, 120]
    # the last refit uses data up to 119, close to the full fit
    np.testing.assert_allclose(pred.pred[-1], negbin_fit.fitted_mean[119], rtol=0.2)


def test_prediction_window_errors(negbin_fit):
    with pytest.raises(ValueError, match="invalid tp"):
        one_step_ahead(negbin_fit, (100, 120))
    with pytest.raises(ValueError, match="invalid prediction type"):
        one_step_ahead(negbin_fit, (100, 110), type="expanding")
    with pytest.raises(ValueError, match="rolling refits need from >= 2"):
        one_step_ahead(negbin_fit, (1, 10), type="rolling")


def test_predictions_table(negbin_fit):
    pred = one_step_ahead(negbin_fit, (100, 102))
    table = predictions_frame(pred)
    assert list(table.columns) == ["time", "unit", "observed", "pred", "psi"]
    assert len(table) == 12
    back = read_predictions(table)
    np.testing.assert_allclose(back.pred, pred.pred)
    with pytest.raises(ValueError, match="missing column 'pred'"):
        read_predictions(table.drop(columns=["pred"]))


def test_scores_frame_and_means(negbin_fit):
    pred = one_step_ahead(negbin_fit, (100, 102))
    scores = score_predictions(pred)
    frame = scores_frame(pred, scores)
    assert list(frame.columns) == ["unit", "time", "score", "value"]
    assert set(frame["score"]) == {"logs", "rps", "ses"}
    overall = mean_scores(scores)
    by_unit = mean_scores(scores, by="unit", pd_=pred)
    assert list(by_unit.index) == ["u1", "u2", "u3", "u4"]
    assert by_unit["logs"].mean() == pytest.approx(overall.loc[0, "logs"])
    with pytest.raises(ValueError, match="invalid grouping"):
        mean_scores(scores, by="week", pd_=pred)


def test_pit_calibrated():
    rng = np.random.default_rng(1)
    y = rng.poisson(3.0, 10_000)
    heights = pit_histogram(poisson_predictions(np.full(y.size, 3.0), y), 10)
    np.testing.assert_allclose(heights, 1.0, atol=0.1)
    assert heights.sum() / 10 == pytest.approx(1.0, abs=1e-12)


def test_pit_degenerate_forecast_is_uniform():
    """P(y - 1) = 0 and P(y) = 1 give a linear ramp."""
    heights = pit_histogram(poisson_predictions(np.full(5, 1e-14), np.zeros(5)), 4)
    np.testing.assert_allclose(heights, 1.0, atol=1e-9)


def test_pit_overprediction_decreases():
    rng = np.random.default_rng(2)
    y = rng.poisson(3.0, 20_000)
    heights = pit_histogram(poisson_predictions(np.full(y.size, 6.0), y), 10)
    assert heights[0] > 1 > heights[-1]
    assert np.all(np.diff(heights) < 0.05)


def test_conditional_pit_point_mass():
    lower = np.array([0.4, 0.2])
    upper = np.array([0.4, 0.6])
    np.testing.assert_allclose(conditional_pit_cdf(0.4, lower, upper), [1.0, 0.5])
    np.testing.assert_allclose(conditional_pit_cdf(0.3, lower, upper), [0.0, 0.25])


def test_pit_bins():
    with pytest.raises(ValueError, match="n_bins must be at least 2"):
        pit_histogram(poisson_predictions([1.0], [0]), 1)


def test_permutation_identical_scores():
    scores = np.random.default_rng(0).uniform(size=(10, 4))
    result = permutation_test(scores, scores, n_permutations=999, seed=1)
    assert result["diffObs"] == 0.0
    assert result["pVal.permut"] == 1.0
    assert result["pVal.t"] == 1.0


def test_permutation_shift():
    a = np.random.default_rng(3).uniform(size=100)
    result = permutation_test(a, a + 1, seed=4)
    assert result["diffObs"] == pytest.approx(-1.0)
    assert result["pVal.permut"] < 0.01


def test_permutation_symmetry():
    rng = np.random.default_rng(5)
    a, b = rng.normal(size=50), rng.normal(size=50)
    ab = permutation_test(a, b, n_permutations=500, seed=2)
    ba = permutation_test(b, a, n_permutations=500, seed=2)
    assert ab["diffObs"] == pytest.approx(-ba["diffObs"])
    assert ab["pVal.permut"] == ba["pVal.permut"]
    assert ab["pVal.t"] == pytest.approx(ba["pVal.t"])


def test_permutation_arguments():
    with pytest.raises(ValueError, match="at least 100"):
        permutation_test(np.zeros(5), np.ones(5), n_permutations=99)
    with pytest.raises(ValueError, match="differ in shape"):
        permutation_test(np.zeros(5), np.ones(4))


def test_residuals_of_unit_rate_process():
    times = np.array([0.5, 1.7, 3.0, 4.2, 8.9])
    result = residual_transform(lambda t: t, times, T=10.0)
    np.testing.assert_allclose(result.u, times / 10.0)
    np.testing.assert_allclose(result.ecdf, [0.2, 0.4, 0.6, 0.8, 1.0])
    assert result.lag_pairs.shape == (4, 2)
    np.testing.assert_allclose(result.lag_pairs[0], [1 - math.exp(-0.5), 1 - math.exp(-1.2)])


def test_residuals_are_scale_invariant():
    times = [1.0, 2.5, 6.0]
    unit = residual_transform(lambda t: t, times, T=10.0)
    scaled = residual_transform(lambda t: 3.5 * t, times, T=10.0)
    np.testing.assert_allclose(unit.u, scaled.u)


def test_residuals_from_values():
    result = residual_transform([1.0, 2.0, 4.0], [0.3, 0.9], T=2.0)
    np.testing.assert_allclose(result.u, [0.25, 0.5])


def test_residual_errors():
    with pytest.raises(ValueError, match="non-monotone"):
        residual_transform([2.0, 1.0, 4.0], [0.3, 0.9], T=2.0)
    with pytest.raises(ValueError, match="expected 0"):
        residual_transform(lambda t: t + 1.0, [0.3, 0.9], T=2.0)
    with pytest.raises(ValueError, match="at least one event"):
        residual_transform(lambda t: t, [], T=2.0)


def test_ks_band():
    assert ks_band(20) == pytest.approx(stats.kstwo.ppf(0.95, 20))
    assert ks_band(400) == pytest.approx(1.3580986 / 20, rel=1e-6)


def test_uniform_residuals_inside_band():
    rng = np.random.default_rng(8)
    times = np.sort(rng.uniform(0, 100, 300))
    result = residual_transform(lambda t: np.asarray(t, dtype=float), times, T=100.0)
    assert result.band == pytest.approx(ks_band(300))
    assert result.ks_pvalue > 0.001
