"""
Tests for seeded forward simulation.
"""

import math
from functools import partial

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from ee_models.config.models import (
    ComponentSpec,
    EndemicSpec,
    EpidemicSpec,
    HHH4Spec,
    KernelSpec,
    SimConfig,
    TwinSIRSpec,
    TwinstimSpec,
)
from ee_models.core.random import replicate_streams
from ee_models.data import build_point_pattern
from ee_models.forecast import residual_transform
from ee_models.geometry import PolygonSet
from ee_models.models import (
    TwinstimFit,
    TwinstimModel,
    cumulative_ground_intensity,
    cumulative_intensity,
    fit_hhh4,
    fit_twinsir,
    fit_twinstim,
)
from ee_models.simulation import (
    SOURCE_ENDEMIC,
    SOURCE_PREHISTORY,
    final_sizes,
    observed_infectious_period,
    sample_kernel_location,
    simulate_hhh4,
    simulate_twinsir,
    simulate_twinstim,
    uniform_in_polygon,
)
from ee_models.models.kernels import make_siaf
from tests.conftest import INFECTIOUS_PERIOD, rectangle


@pytest.fixture
def hhh4_fit(count_series):
    spec = HHH4Spec(family="NegBin1", endemic=ComponentSpec(), ar=ComponentSpec(),
                    ne=ComponentSpec())
    return fit_hhh4(spec, count_series)


def fixed_twinstim(spec, pattern, coefficients):
    """A TwinstimFit carrying given coefficients instead of estimates."""
    model = TwinstimModel(spec, pattern)
    theta = model.vector(coefficients)
    return TwinstimFit(names=model.names, coefficients=theta,
                       cov=np.zeros((model.n_params, model.n_params)), loglik=0.0,
                       converged=True, spec=spec, pattern=pattern,
                       integrals=model.cached_integrals(theta), model=model)


@pytest.fixture
def epidemic_twinstim(point_pattern):
    """Constant-kernel model with fixed coefficients and offspring mean about 0.7."""
    spec = TwinstimSpec(endemic=EndemicSpec(), epidemic=EpidemicSpec())
    return fixed_twinstim(spec, point_pattern,
                          {"h.(Intercept)": -5.0, "e.(Intercept)": math.log(0.005)})


def test_replicate_streams_are_independent_of_count():
    few = replicate_streams(7, 2)
    many = replicate_streams(7, 5)
    assert few[1].uniform() == many[1].uniform()
    with pytest.raises(ValueError, match="nsim must be positive"):
        replicate_streams(7, 0)


def test_hhh4_simulation_shape_and_reproducibility(hhh4_fit):
    config = SimConfig(seed=42, nsim=3)
    first = simulate_hhh4(hhh4_fit, config)
    second = simulate_hhh4(hhh4_fit, config)
    assert first.counts.shape == (119, 4, 3)
    np.testing.assert_array_equal(first.counts, second.counts)
    np.testing.assert_array_equal(first.final_sizes, first.counts.sum(axis=(0, 1)))
    other = simulate_hhh4(hhh4_fit, SimConfig(seed=43, nsim=3))
    assert not np.array_equal(first.counts, other.counts)


def test_hhh4_simulation_threads_do_not_change_results(hhh4_fit):
    serial = simulate_hhh4(hhh4_fit, SimConfig(seed=5, nsim=4, subset=(100, 120)))
    threaded = simulate_hhh4(hhh4_fit, SimConfig(seed=5, nsim=4, subset=(100, 120), threads=2))
    np.testing.assert_array_equal(serial.counts, threaded.counts)


def test_hhh4_endemic_simulation_mean(count_series):
    fit = fit_hhh4(HHH4Spec(family="Poisson", endemic=ComponentSpec()), count_series)
    sim = simulate_hhh4(fit, SimConfig(seed=1, nsim=50))
    assert sim.counts.mean() == pytest.approx(math.exp(fit.coef("end.1")), rel=0.05)


def test_hhh4_mean_recursion(hhh4_fit):
    """Simulated means follow m_t = e nu_t + Lambda m_(t-1) with ar and ne active."""
    nsim = 1000
    sim = simulate_hhh4(hhh4_fit, SimConfig(seed=21, nsim=nsim, subset=(101, 120)))
    model, theta = hhh4_fit.model, hhh4_fit.coefficients
    m = hhh4_fit.data.counts[99].astype(float)
    means = []
    for k, t in enumerate(sim.times):
        m = model.mean_at(theta, int(t), m)
        means.append(m)
        draws = sim.counts[k].astype(float)
        se = draws.std(axis=1, ddof=1) / math.sqrt(nsim)
        assert np.all(np.abs(draws.mean(axis=1) - m) < 4 * se), t
    totals = sim.counts.sum(axis=(0, 1))
    se = totals.std(ddof=1) / math.sqrt(nsim)
    assert abs(totals.mean() - np.sum(means)) < 3 * se


def test_hhh4_start_counts(hhh4_fit):
    with pytest.raises(ValueError, match="y.start is missing"):
        simulate_hhh4(hhh4_fit, SimConfig(seed=1, subset=(1, 10)))
    with pytest.raises(ValueError, match="y.start has 2 entries"):
        simulate_hhh4(hhh4_fit, SimConfig(seed=1, subset=(1, 10), yStart=[0, 0]))
    sim = simulate_hhh4(hhh4_fit, SimConfig(seed=1, subset=(1, 10), yStart=[0, 0, 0, 0]))
    assert sim.times[0] == 1


def test_hhh4_invalid_subset(hhh4_fit):
    with pytest.raises(ValueError, match="invalid subset"):
        simulate_hhh4(hhh4_fit, SimConfig(seed=1, subset=(10, 500)))


def test_uniform_in_polygon(window):
    rng = np.random.default_rng(0)
    points = uniform_in_polygon(rectangle(2, 2, 4, 3), 500, rng)
    assert points.shape == (500, 2)
    assert points[:, 0].min() >= 2 and points[:, 0].max() <= 4
    assert points[:, 1].mean() == pytest.approx(2.5, abs=0.05)


def test_uniform_in_thin_polygon():
    """A thin diagonal sliver goes through triangulation."""
    sliver = PolygonSet.from_rings([(0, 0), (10, 10), (10, 10.05), (0, 0.05)])
    points = uniform_in_polygon(sliver, 100, np.random.default_rng(2))
    assert np.all(np.abs(points[:, 1] - points[:, 0]) <= 0.05 + 1e-9)


@pytest.mark.parametrize("spec,theta,bound", [
    (KernelSpec(kind="gaussian", sigma=1.0), [0.0], math.inf),
    (KernelSpec(kind="powerlaw", sigma=0.5, d=2.5), [math.log(0.5), math.log(2.5)], 5.0),
    (KernelSpec(kind="step", knots=[1.0, 2.0]), [math.log(0.5), math.log(0.2)], 3.0),
])
def test_kernel_location_radius_distribution(spec, theta, bound):
    """Sampled radii follow F(r) / F(bound)."""
    kernel = make_siaf(spec)
    theta = np.asarray(theta)
    offsets = sample_kernel_location(kernel, theta, bound, np.random.default_rng(4), size=1000)
    radii = np.hypot(offsets[:, 0], offsets[:, 1])
    assert radii.max() <= bound
    total = kernel.total(theta, bound)
    result = stats.kstest(radii, lambda r: kernel.F(np.asarray(r, dtype=float), theta) / total)
    assert result.pvalue > 0.01


def test_kernel_location_bound():
    kernel = make_siaf(KernelSpec(kind="gaussian", sigma=1.0))
    bounded = sample_kernel_location(kernel, np.array([0.0]), 0.5,
                                     np.random.default_rng(4), size=100)
    assert np.hypot(bounded[:, 0], bounded[:, 1]).max() <= 0.5


def test_kernel_location_needs_integrable_kernel():
    kernel = make_siaf(KernelSpec(kind="powerlaw", sigma=1.0, d=1.5))
    with pytest.raises(ValueError, match="not integrable"):
        sample_kernel_location(kernel, np.log([1.0, 1.5]), math.inf, np.random.default_rng(0))


def test_twinstim_endemic_simulation(point_pattern):
    fit = fit_twinstim(TwinstimSpec(), point_pattern)
    patterns = simulate_twinstim(fit, SimConfig(seed=3, nsim=20))
    sizes = [p.n_events for p in patterns]
    assert np.mean(sizes) == pytest.approx(40, abs=6)
    assert all((p.events["source"] == SOURCE_ENDEMIC).all() for p in patterns)
    again = simulate_twinstim(fit, SimConfig(seed=3, nsim=20))
    assert [p.n_events for p in again] == sizes


def test_twinstim_endemic_cell_counts(point_pattern):
    """Endemic counts per (block, tile, type) cell match Poisson means area * duration * rho."""
    fit = fit_twinstim(TwinstimSpec(), point_pattern)
    nsim = 200
    patterns = simulate_twinstim(fit, SimConfig(seed=8, nsim=nsim))
    observed = pd.concat([p.events[["BLOCK", "tile", "type"]] for p in patterns]).value_counts()
    cells = [(b, tile, k) for b in range(4) for tile in ("A", "B") for k in ("B", "C")]
    counts = np.array([observed.get(cell, 0) for cell in cells], dtype=float)
    expected = math.exp(fit.coef("h.(Intercept)")) * 50.0 * 10.0 * nsim
    statistic = float(np.sum((counts - expected) ** 2 / expected))
    assert counts.sum() == sum(p.n_events for p in patterns)
    assert stats.chi2.sf(statistic, len(cells)) > 0.01


def test_twinstim_offspring_follow_parents(epidemic_twinstim):
    patterns = simulate_twinstim(epidemic_twinstim, SimConfig(seed=9, nsim=3))
    children = 0
    for pattern in patterns:
        events = pattern.events.reset_index(drop=True)
        for k, source in enumerate(events["source"]):
            if source > 0:
                children += 1
                parent = events.iloc[source - 1]
                assert parent["time"] < events.loc[k, "time"] <= parent["time"] + 5.0
                assert parent["type"] == events.loc[k, "type"]
                assert math.hypot(parent["x"] - events.loc[k, "x"],
                                  parent["y"] - events.loc[k, "y"]) <= 3.0 + 1e-9
    assert children > 0


def test_twinstim_prehistory(epidemic_twinstim, point_pattern):
    pattern = simulate_twinstim(epidemic_twinstim,
                                SimConfig(seed=1, nsim=1, timeWindow=(20.0, 40.0)))[0]
    events = pattern.events
    kept = events[events["source"] == SOURCE_PREHISTORY]
    assert len(kept) == int((point_pattern.times <= 20.0).sum())
    assert (events.loc[events["source"] != SOURCE_PREHISTORY, "time"] > 20.0).all()


def test_twinstim_window_outside_grid(epidemic_twinstim):
    with pytest.raises(ValueError, match="exceeds the stgrid period"):
        simulate_twinstim(epidemic_twinstim, SimConfig(seed=1, timeWindow=(0.0, 50.0)))


def test_observed_infectious_period(event_history):
    assert observed_infectious_period(event_history) == pytest.approx(INFECTIOUS_PERIOD)


def test_twinsir_simulation(event_history):
    fit = fit_twinsir(TwinSIRSpec(epidemic=["household", "nothousehold"]), event_history)
    histories = simulate_twinsir(fit, SimConfig(seed=11, nsim=5))
    again = simulate_twinsir(fit, SimConfig(seed=11, nsim=5))
    sizes = final_sizes(histories)
    assert sizes.name == "infections"
    assert list(sizes) == list(final_sizes(again))
    for history in histories:
        # p1 starts infectious and keeps its observed removal
        assert history.infectious[0, 0]
        assert history.T == 20.0


def test_twinsir_simulation_errors(event_history):
    fit = fit_twinsir(TwinSIRSpec(), event_history)
    with pytest.raises(ValueError, match="exceeds the observed period"):
        simulate_twinsir(fit, SimConfig(seed=1, timeWindow=(0.0, 30.0)))
    with pytest.raises(ValueError, match="infectious period must be positive"):
        simulate_twinsir(fit, SimConfig(seed=1), infectious_period=0.0)


@pytest.mark.slow
def test_twinstim_subcritical_branching():
    """Mean pattern size is the endemic mean over 1 - m for offspring mean m."""
    window = rectangle(0, 0, 100, 100)
    grid = pd.DataFrame({"start": [0.0], "stop": [200.0], "tile": ["A"], "area": [1e4]})
    first = pd.DataFrame({"time": [10.0], "x": [50.0], "y": [50.0], "type": ["1"],
                          "eps_t": [0.2], "eps_s": [0.2], "tile": ["A"]})
    pattern = build_point_pattern(first, window, grid, tiles={"A": window})
    m, rho = 0.5, 1e-5
    eta = m / (0.2 * pattern.influence_regions[0].area)
    fit = fixed_twinstim(TwinstimSpec(endemic=EndemicSpec(), epidemic=EpidemicSpec()),
                         pattern, {"h.(Intercept)": math.log(rho), "e.(Intercept)": math.log(eta)})

    nsim = 500
    sizes = np.array([p.n_events for p in simulate_twinstim(fit, SimConfig(seed=31, nsim=nsim))])
    expected = rho * 1e4 * 200.0 / (1 - m)
    se = sizes.std(ddof=1) / math.sqrt(nsim)
    # offspring lost over the window border shift the mean by well under 1%
    assert abs(sizes.mean() - expected) < 3 * se + 0.01 * expected


@pytest.mark.slow
def test_twinstim_residuals_of_self_simulated_patterns(epidemic_twinstim):
    """The time-rescaled events pass KS at 5% in at least 93 of 100 replicates."""
    spec = epidemic_twinstim.spec
    coefficients = dict(zip(epidemic_twinstim.names, epidemic_twinstim.coefficients))
    passed = 0
    for pattern in simulate_twinstim(epidemic_twinstim, SimConfig(seed=12, nsim=100)):
        fit = fixed_twinstim(spec, pattern, coefficients)
        result = residual_transform(partial(cumulative_ground_intensity, fit),
                                    pattern.times, T=pattern.T, t0=pattern.t0)
        passed += result.ks_pvalue > 0.05
    assert passed >= 93


@pytest.mark.slow
def test_twinsir_residuals_of_self_simulated_histories(event_history):
    """The time-rescaled infections pass KS at 5% in at least 93% of the replicates."""
    fit = fit_twinsir(TwinSIRSpec(epidemic=["household", "nothousehold"]), event_history)
    passed = tested = 0
    for history in simulate_twinsir(fit, SimConfig(seed=12, nsim=100)):
        times = history.infection_times
        times = times[(times > history.t0) & (times <= history.T)]
        if times.size == 0:
            continue
        result = residual_transform(partial(cumulative_intensity, fit, history=history),
                                    times, T=history.T, t0=history.t0)
        tested += 1
        passed += result.ks_pvalue > 0.05
    assert tested >= 95
    assert passed >= 0.93 * tested
