"""
Reference fits on the exported surveillance datasets.

The datasets live under tests/fixtures/ (not shipped with the repository):

- measles/counts.csv, measles/pop.csv, measles/adjacency.txt,
  measles/covariates/Sprop.csv (weekly counts from 2001 week 1)
- hagelloch/individuals.csv (id, x, y, tI, tR, CL, ...)
- imd/events.csv, imd/events_infeps.csv, imd/stgrid.csv, imd/tiles.geojson,
  imd/qmatrix.csv

Every test skips when its files are missing.
"""

import math
import os

import numpy as np
import pandas as pd
import pytest

from ee_models.config.loader import parse_model_spec
from ee_models.data import build_event_history, build_point_pattern, validate_counts
from ee_models.data.io import (
    read_adjacency,
    read_counts,
    read_covariates,
    read_events,
    read_geojson,
    read_individuals,
    read_pop_frac,
    read_stgrid,
)
from ee_models.data.points import aggregate_to_counts
from ee_models.forecast.predict import one_step_ahead
from ee_models.forecast.scores import mean_scores, score_predictions
from ee_models.geometry import PolygonSet
from ee_models.models.hhh4 import fit_hhh4, summarize_hhh4
from ee_models.models.twinsir import fit_twinsir, profile_ci
from ee_models.models.twinstim import fit_twinstim, glm_equivalence, r0_events
from tests.conftest import fixture_path

pytestmark = pytest.mark.slow

SPECS = os.path.join(os.path.dirname(os.path.dirname(__file__)), "specs")


def spec(name):
    return parse_model_spec(os.path.join(SPECS, name))


def load_measles():
    counts, unit_ids = read_counts(fixture_path("measles/counts.csv"))
    pop = read_pop_frac(fixture_path("measles/pop.csv"), unit_ids)
    adjacency = read_adjacency(fixture_path("measles/adjacency.txt"), unit_ids)
    covariates = read_covariates(fixture_path("measles/covariates"), unit_ids)
    return validate_counts(counts, (2001, 1), 52, pop, adjacency, unit_ids=unit_ids,
                           covariates=covariates)


def load_imd(events="imd/events.csv", n_circle=16):
    tiles = read_geojson(fixture_path("imd/tiles.geojson"))
    q = pd.read_csv(fixture_path("imd/qmatrix.csv"), index_col=0).astype(bool)
    q.index = q.index.astype(str)
    q.columns = q.columns.astype(str)
    pattern = build_point_pattern(read_events(fixture_path(events)),
                                  PolygonSet.union(list(tiles.values())),
                                  read_stgrid(fixture_path("imd/stgrid.csv")), q,
                                  n_circle=n_circle, tiles=tiles)
    return pattern, tiles


@pytest.fixture(scope="module")
def measles_basic():
    return fit_hhh4(spec("measles_basic.json"), load_measles())


@pytest.fixture(scope="module")
def imd_endemic():
    pattern, _ = load_imd()
    return fit_twinstim(spec("imd_endemic.json"), pattern)


@pytest.fixture(scope="module")
def imd_gaussian():
    pattern, _ = load_imd()
    return fit_twinstim(spec("imd_gaussian.json"), pattern)


def test_measles_basic_fit(measles_basic):
    """Basic NegBin1 fit: transmission parameters, likelihood and dominant eigenvalue."""
    coef = dict(zip(measles_basic.names, measles_basic.coefficients))
    assert math.exp(coef["ar.1"]) == pytest.approx(0.6454, rel=0.01)
    assert math.exp(coef["ne.1"]) == pytest.approx(0.0158, rel=0.01)
    assert measles_basic.loglik == pytest.approx(-972, abs=1)
    assert measles_basic.aic == pytest.approx(1957, abs=1)
    assert measles_basic.bic == pytest.approx(1996, abs=1)
    summary = summarize_hhh4(measles_basic, maxEV=True)
    assert summary["maxEV"] == pytest.approx(0.72, abs=0.01)


def test_measles_overdispersion(measles_basic):
    """Common overdispersion psi on the natural scale."""
    coef = dict(zip(measles_basic.names, measles_basic.coefficients))
    assert math.exp(coef["overdisp"]) == pytest.approx(2.014, rel=0.01)


def test_measles_poisson():
    """The Poisson variant fits much worse."""
    fit = fit_hhh4(spec("measles_poisson.json"), load_measles())
    assert fit.aic == pytest.approx(2479, abs=1)


def test_measles_vaccination_and_neighbourhood():
    """Susceptible proportion, population gravity and power-law decay."""
    series = load_measles()
    vacc = fit_hhh4(spec("measles_vacc.json"), series)
    k = vacc.names.index("end.log(Sprop)")
    assert vacc.coefficients[k] == pytest.approx(1.718, abs=0.02)
    assert vacc.se[k] == pytest.approx(0.288, abs=0.01)
    assert vacc.aic == pytest.approx(1917, abs=1)

    nepop = fit_hhh4(spec("measles_nepop.json"), series)
    assert nepop.coefficients[nepop.names.index("ne.log(pop)")] == pytest.approx(2.85, abs=0.05)
    assert nepop.aic == pytest.approx(1887, abs=1)

    powerlaw = fit_hhh4(spec("measles_powerlaw.json"), series)
    d = math.exp(powerlaw.coefficients[powerlaw.names.index("neweights.d")])
    assert d == pytest.approx(4.10, abs=0.1)
    assert powerlaw.aic == pytest.approx(1882, abs=1)


def test_measles_final_scores(measles_basic):
    """Mean logs, rps and ses of final predictions for weeks 66 to 78."""
    pred = one_step_ahead(measles_basic, (65, 77), "final")
    means = mean_scores(score_predictions(pred)).iloc[0]
    assert means["logs"] == pytest.approx(1.09, abs=0.01)
    assert means["rps"] == pytest.approx(0.736, abs=0.01)
    assert means["ses"] == pytest.approx(5.29, abs=0.01)


def test_hagelloch_fit():
    """Household, class and background effects of the Hagelloch measles outbreak."""
    history = build_event_history(read_individuals(fixture_path("hagelloch/individuals.csv")))
    fit = fit_twinsir(spec("hagelloch.json"), history)
    expected = {
        "household": 0.026868,
        "c1": 0.023892,
        "c2": 0.002932,
        "nothousehold": 0.000831,
        "cox(logbaseline)": -7.362644,
    }
    coef = dict(zip(fit.names, fit.coefficients))
    for name, value in expected.items():
        assert coef[name] == pytest.approx(value, rel=0.02), name
    assert fit.loglik == pytest.approx(-619, abs=1)

    profile = profile_ci(fit, ["c1"], grid_size=25, level=0.95)
    lower, upper = profile["c1"]["hl"]
    assert lower == pytest.approx(0.01522, abs=5e-4)
    assert upper == pytest.approx(0.03497, abs=5e-4)


def test_imd_endemic(imd_endemic):
    """Endemic-only twinstim: intercept, AIC and the Poisson-GLM equivalence."""
    coef = dict(zip(imd_endemic.names, imd_endemic.coefficients))
    assert coef["h.(Intercept)"] == pytest.approx(-20.3683, abs=0.01)
    assert imd_endemic.aic == pytest.approx(19166, abs=1)
    result = glm_equivalence(imd_endemic.spec, imd_endemic.pattern)
    assert result["maxAbsDifference"] < 1e-6


def test_imd_gaussian(imd_endemic, imd_gaussian):
    """Gaussian spatial kernel: scale and type-specific reproduction numbers."""
    coef = dict(zip(imd_gaussian.names, imd_gaussian.coefficients))
    assert math.exp(coef["e.siaf.1"]) == pytest.approx(16.30, rel=0.05)
    assert imd_gaussian.aic < imd_endemic.aic
    assert imd_gaussian.aic == pytest.approx(18967, abs=1)

    r0 = pd.Series(r0_events(imd_gaussian)).groupby(
        imd_gaussian.pattern.events["type"].to_numpy()).mean()
    assert r0["B"] == pytest.approx(0.218, rel=0.05)
    assert r0["C"] == pytest.approx(0.0962, rel=0.05)


def test_imd_powerlaw_and_step(imd_gaussian):
    """Power-law and step kernels on the enlarged interaction range."""
    pattern, _ = load_imd("imd/events_infeps.csv")
    powerlaw = fit_twinstim(spec("imd_powerlaw.json"), pattern)
    coef = dict(zip(powerlaw.names, powerlaw.coefficients))
    assert math.exp(coef["e.siaf.1"]) == pytest.approx(4.48, rel=0.05)
    assert math.exp(coef["e.siaf.2"]) == pytest.approx(2.45, rel=0.05)

    step = fit_twinstim(spec("imd_step.json"), pattern)
    assert imd_gaussian.aic > powerlaw.aic > step.aic
    assert powerlaw.aic == pytest.approx(18940, abs=1)
    assert step.aic == pytest.approx(18933, abs=1)


def test_imd_aggregation_keeps_events():
    """Monthly tile counts from the events keep all 636 cases."""
    pattern, tiles = load_imd()
    series = aggregate_to_counts(pattern, 12, (2002, 1), tiles)
    assert int(np.sum(series.counts)) == 636
    assert series.counts.shape == (84, len(tiles))
