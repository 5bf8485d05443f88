"""
Tests for the twinSIR event-history engine.
"""

import math

import numpy as np
import pytest

from ee_models.config.models import DistanceBasisSpec, PairIndicatorSpec, TwinSIRSpec
from ee_models.models import (
    TwinSIRModel,
    cif_twinsir,
    confint_twinsir,
    cumulative_intensity,
    epidemic_proportion,
    fit_twinsir,
    intensity_path,
    loglik_twinsir,
    profile_ci,
    step_kernel_terms,
)

# p1 is infectious at t0; the other eleven infections happen before T = 20
N_INFECTIONS = 11
EXPOSURE = 18 * 20.0 + 74.8


@pytest.fixture
def epidemic_spec():
    return TwinSIRSpec(epidemic=["household", "nothousehold"])


@pytest.fixture
def epidemic_fit(epidemic_spec, event_history):
    return fit_twinsir(epidemic_spec, event_history)


def test_endemic_only_closed_form(event_history):
    fit = fit_twinsir(TwinSIRSpec(), event_history)
    assert fit.names == ("cox(logbaseline)",)
    assert math.exp(fit.coef("cox(logbaseline)")) == pytest.approx(N_INFECTIONS / EXPOSURE,
                                                                   rel=1e-5)
    assert fit.se[0] == pytest.approx(1 / math.sqrt(N_INFECTIONS), rel=1e-4)


def test_coefficient_names(epidemic_spec, event_history):
    model = TwinSIRModel(epidemic_spec, event_history)
    assert model.names == ("household", "nothousehold", "cox(logbaseline)")


def test_gradient_and_hessian_match_finite_differences(epidemic_spec, event_history):
    """Score and Hessian against central differences at ten random parameter points."""
    model = TwinSIRModel(epidemic_spec, event_history)
    rng = np.random.default_rng(5)
    h = 1e-7
    for _ in range(10):
        theta = np.array([rng.uniform(0.005, 0.1), rng.uniform(0.001, 0.02),
                          math.log(0.02) + rng.normal(0, 0.3)])
        _, grad = model.loglik(theta)
        hessian = model.hessian(theta)
        for k in range(3):
            step = np.zeros(3)
            step[k] = h
            up_value, up_grad = model.loglik(theta + step)
            down_value, down_grad = model.loglik(theta - step)
            assert grad[k] == pytest.approx((up_value - down_value) / (2 * h),
                                            rel=1e-6, abs=1e-6)
            np.testing.assert_allclose(hessian[:, k], (up_grad - down_grad) / (2 * h),
                                       rtol=1e-4, atol=1e-3)


def test_negative_alpha_rejected(epidemic_spec, event_history):
    with pytest.raises(ValueError, match="alpha must be nonnegative"):
        loglik_twinsir(epidemic_spec, [-0.1, 0.0, 0.0], event_history)


def test_missing_coefficient(epidemic_spec, event_history):
    with pytest.raises(ValueError, match="coefficient 'nothousehold' not found"):
        loglik_twinsir(epidemic_spec, {"household": 0.1, "cox(logbaseline)": -3.0},
                       event_history)


def test_unknown_term(event_history):
    with pytest.raises(ValueError, match="term 'B9' not found"):
        TwinSIRModel(TwinSIRSpec(epidemic=["B9"]), event_history)


def test_fit_respects_constraint(epidemic_fit):
    assert epidemic_fit.converged
    assert np.all(epidemic_fit.alpha >= 0)
    assert epidemic_fit.alpha[0] > 0
    assert "aicNote" in epidemic_fit.extra
    for name in epidemic_fit.extra["boundary"]:
        k = epidemic_fit.index(name)
        assert not epidemic_fit.cov[k].any()


def test_cif_in_the_first_block(epidemic_fit):
    """Only p1 is infectious at first; p2 shares its household."""
    alpha_h = epidemic_fit.coef("household")
    baseline = math.exp(epidemic_fit.coef("cox(logbaseline)"))
    assert cif_twinsir(epidemic_fit, "p2", 1) == pytest.approx(baseline + alpha_h)
    # p1 is not at risk
    assert cif_twinsir(epidemic_fit, "p1", 1) == 0.0


def test_cif_errors(epidemic_fit):
    with pytest.raises(ValueError, match="individual 'p99' not found"):
        cif_twinsir(epidemic_fit, "p99", 1)
    with pytest.raises(ValueError, match="invalid index"):
        cif_twinsir(epidemic_fit, "p2", 0)


def test_step_kernel_terms(event_history):
    history = step_kernel_terms(event_history, [1.0, 2.0])
    assert {"B1", "B2", "B3"} <= set(history.columns)
    p4 = history.ids.index("p4")
    # p4 is one unit away from the initially infectious p1
    assert history.columns["B1"][0, p4] == 0.0
    assert history.columns["B2"][0, p4] == 1.0
    with pytest.raises(ValueError, match="invalid knots"):
        step_kernel_terms(event_history, [2.0, 1.0])


def test_spec_basis_and_pairs(event_history):
    spec = TwinSIRSpec(epidemic=["near", "samecl"],
                       basis={"near": DistanceBasisSpec(lower=0.0, upper=1.5)},
                       pairs={"samecl": PairIndicatorSpec(column="cl", value=1)})
    model = TwinSIRModel(spec, event_history)
    p3 = model.history.ids.index("p3")
    # p1 (cl 1, distance 0) is infectious in the first block
    assert model.history.columns["near"][0, p3] == 1.0
    assert model.history.columns["samecl"][0, p3] == 1.0


def test_intensity_path_and_compensator(epidemic_fit, event_history):
    path = intensity_path(epidemic_fit)
    np.testing.assert_allclose(path["total"], path["endemic"] + path["epidemic"])
    durations = event_history.durations
    assert cumulative_intensity(epidemic_fit, [20.0])[0] == pytest.approx(
        float(np.sum(durations * path["total"])))
    assert cumulative_intensity(epidemic_fit, [0.0])[0] == 0.0
    share = epidemic_proportion(epidemic_fit)["proportion"]
    assert share.between(0, 1).all()


def test_compensator_at_mle_equals_event_count(event_history):
    fit = fit_twinsir(TwinSIRSpec(), event_history)
    assert cumulative_intensity(fit, [20.0])[0] == pytest.approx(N_INFECTIONS, rel=1e-5)
    assert not epidemic_proportion(fit)["proportion"].any()


def test_confint_alpha_cut_at_zero(epidemic_fit):
    lo, hi = confint_twinsir(epidemic_fit, "nothousehold")
    assert lo >= 0.0
    lo, hi = confint_twinsir(epidemic_fit, "cox(logbaseline)", exp=True)
    assert lo < math.exp(epidemic_fit.coef("cox(logbaseline)")) < hi


def test_profile_interval(epidemic_fit):
    result = profile_ci(epidemic_fit, ["cox(logbaseline)"], grid_size=7)
    entry = result["cox(logbaseline)"]
    assert len(entry["grid"]) == 7
    assert (entry["grid"]["profile"] <= 1e-4).all()
    lo, hi = entry["hl"]
    est = epidemic_fit.coef("cox(logbaseline)")
    assert lo < est < hi
    wald_lo, wald_hi = entry["wald"]
    assert lo == pytest.approx(wald_lo, abs=0.5)
    assert hi == pytest.approx(wald_hi, abs=0.5)


def test_profile_arguments(epidemic_fit):
    with pytest.raises(ValueError, match="level must be in"):
        profile_ci(epidemic_fit, [0], level=1.5)
    with pytest.raises(ValueError, match="grid size"):
        profile_ci(epidemic_fit, [0], grid_size=2)
    with pytest.raises(ValueError, match="not found"):
        profile_ci(epidemic_fit, ["alpha"])
