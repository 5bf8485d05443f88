"""
Tests for SIR event histories.
"""

import numpy as np
import pandas as pd
import pytest

from ee_models.data import (
    DistanceBasis,
    PairIndicator,
    build_event_history,
    from_table,
    summarize_history,
)
from tests.conftest import INFECTION_TIMES, INFECTIOUS_PERIOD


def test_blocks_break_at_every_event(event_history):
    """One block per infection and removal inside (t0, T], plus the tail to T."""
    n_events = (len(INFECTION_TIMES) - 1) + len(INFECTION_TIMES)
    assert event_history.n_blocks == n_events + 1
    assert event_history.n_individuals == 30
    bounds = event_history.block_bounds
    np.testing.assert_allclose(bounds[1:, 0], bounds[:-1, 1])
    assert (bounds[0, 0], bounds[-1, 1]) == (0.0, 20.0)


def test_initially_infectious(event_history):
    assert event_history.infectious[0, 0]
    assert not event_history.at_risk[0, 0]
    assert event_history.at_risk[0, 1:].all()


def test_events_and_removals(event_history):
    infected = event_history.event[event_history.event >= 0]
    assert sorted(infected.tolist()) == list(range(1, len(INFECTION_TIMES)))
    removed = event_history.revent[event_history.revent >= 0]
    assert sorted(removed.tolist()) == list(range(len(INFECTION_TIMES)))
    b = int(np.flatnonzero(event_history.event == 1)[0])
    assert event_history.block_bounds[b, 1] == pytest.approx(INFECTION_TIMES[1])
    # at risk in the block ending with the infection, not afterwards
    assert event_history.at_risk[b, 1]
    assert not event_history.at_risk[b + 1, 1]


def test_household_term_counts_infectious_housemates(event_history):
    """p2 shares p1's location, so its household term is 1 while p1 is infectious."""
    household = event_history.columns["household"]
    assert household[0, 1] == 1.0
    assert household[0, 3] == 0.0
    # p1 is removed at 4.05; from then on only p2 and p3 (also infected) count
    first_after = int(np.flatnonzero(event_history.block_bounds[:, 0]
                                     >= INFECTIOUS_PERIOD - 1e-9)[0])
    assert household[first_after, 0] == 2.0


def test_nothousehold_term_excludes_zero_distance(event_history):
    nothousehold = event_history.columns["nothousehold"]
    assert nothousehold[0, 1] == 0.0
    assert nothousehold[0, 3] == 1.0


def test_pair_indicator(individuals):
    history = build_event_history(individuals, T=20.0,
                                  pair_covariates={"c1": PairIndicator("cl", 1)})
    c1 = history.columns["c1"]
    # p1 (class 1) is the only infective in the first block
    assert c1[0, 2] == 1.0
    assert c1[0, 1] == 0.0


def test_single_individual_without_events():
    individuals = pd.DataFrame({"id": ["a"], "x": [0.0], "y": [0.0]})
    history = build_event_history(individuals, T=5.0,
                                  basis_fns={"near": DistanceBasis(0.0, 1.0)})
    assert history.n_blocks == 1
    assert history.columns["near"].sum() == 0.0
    assert history.at_risk[0, 0]


def test_removal_before_infection(individuals):
    individuals.loc[4, "tR"] = individuals.loc[4, "tI"] - 1.0
    with pytest.raises(ValueError, match="individual 'p5' has removal time"):
        build_event_history(individuals, T=20.0)


def test_tied_event_times(individuals):
    individuals.loc[5, "tI"] = individuals.loc[4, "tI"]
    with pytest.raises(ValueError, match="tied event times"):
        build_event_history(individuals, T=20.0)


def test_negative_t0(individuals):
    with pytest.raises(ValueError, match="t0 must be nonnegative"):
        build_event_history(individuals, t0=-1.0)


def test_end_defaults_to_last_event(individuals):
    history = build_event_history(individuals)
    assert history.T == pytest.approx(INFECTION_TIMES[-1] + INFECTIOUS_PERIOD)


def test_no_events_needs_end():
    individuals = pd.DataFrame({"id": ["a"], "x": [0.0], "y": [0.0]})
    with pytest.raises(ValueError, match="T must be given"):
        build_event_history(individuals)


def test_covariate_changes_split_blocks(individuals):
    changes = pd.DataFrame({"id": ["p20"], "time": [15.0], "vacc": [1.0]})
    history = build_event_history(individuals, T=20.0, covariate_changes=changes)
    starts = history.block_bounds[:, 0]
    assert 15.0 in starts
    vacc = history.columns["vacc"][:, 19]
    assert (vacc[starts >= 15.0] == 1.0).all()
    assert (vacc[starts < 15.0] == 0.0).all()


def test_table_rebuilds_the_history(event_history):
    rebuilt = from_table(event_history.table)
    np.testing.assert_array_equal(rebuilt.at_risk, event_history.at_risk)
    np.testing.assert_array_equal(rebuilt.infectious, event_history.infectious)
    np.testing.assert_array_equal(rebuilt.event, event_history.event)
    np.testing.assert_allclose(rebuilt.columns["household"], event_history.columns["household"])


def test_table_keeps_unremoved_initial_infectives(individuals, bases):
    """p1 stays infectious until T; p30 was removed before t0."""
    individuals.loc[0, "tR"] = np.nan
    individuals.loc[29, ["tI", "tR"]] = [-5.0, -1.0]
    history = build_event_history(individuals, t0=0.0, basis_fns=bases, T=20.0)
    assert history.infectious[:, 0].all()
    assert not history.infectious[:, 29].any()

    rebuilt = from_table(history.table)
    np.testing.assert_array_equal(rebuilt.infectious, history.infectious)
    np.testing.assert_allclose(rebuilt.columns["household"], history.columns["household"])

    # without the flag column everyone never at risk counts as infectious
    unflagged = from_table(history.table.drop(columns=["infectious"]))
    assert unflagged.infectious[:, 0].all()
    assert unflagged.infection_times[0] == 0.0


def test_summary(event_history):
    summary = summarize_history(event_history)
    assert summary["individuals"] == 30
    assert summary["initiallyInfectious"] == 1
    assert summary["infections"] == len(INFECTION_TIMES) - 1
    assert summary["epidemicTerms"] == ["household", "nothousehold"]
