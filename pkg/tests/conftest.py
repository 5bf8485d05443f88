"""
Shared fixtures: small synthetic datasets for the three engines.
"""

import os

import numpy as np
import pandas as pd
import pytest

from ee_models.data import build_event_history, build_point_pattern, validate_counts
from ee_models.data.history import DistanceBasis
from ee_models.geometry import PolygonSet, adjacency_from_edges

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

INFECTION_TIMES = [0.0, 1.1, 2.3, 3.2, 4.6, 5.4, 6.9, 7.5, 8.8, 10.2, 11.7, 13.1]
INFECTIOUS_PERIOD = 4.05


def rectangle(x0, y0, x1, y1):
    return PolygonSet.from_rings([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def simulate_counts(n_time, n_units, endemic, ar, ne, size, seed):
    """Counts from a first-order-neighbour hhh4 process on a path of units."""
    rng = np.random.default_rng(seed)
    adjacency = np.zeros((n_units, n_units), dtype=bool)
    for i in range(n_units - 1):
        adjacency[i, i + 1] = adjacency[i + 1, i] = True
    counts = np.zeros((n_time, n_units), dtype=np.int64)
    counts[0] = rng.poisson(endemic)
    for t in range(1, n_time):
        mu = endemic + ar * counts[t - 1] + ne * adjacency.astype(float) @ counts[t - 1]
        counts[t] = rng.negative_binomial(size, size / (size + mu))
    return counts, adjacency


@pytest.fixture
def path_adjacency():
    return adjacency_from_edges([("u1", "u2"), ("u2", "u3"), ("u3", "u4")],
                                ["u1", "u2", "u3", "u4"])


@pytest.fixture
def count_series():
    """120 weeks of counts in four units from a known NegBin process."""
    counts, adjacency = simulate_counts(120, 4, endemic=2.0, ar=0.4, ne=0.1, size=5.0, seed=11)
    return validate_counts(counts, (2001, 1), 52, None, adjacency,
                           unit_ids=["u1", "u2", "u3", "u4"])


@pytest.fixture
def window():
    return rectangle(0, 0, 10, 10)


@pytest.fixture
def tiles():
    return {"A": rectangle(0, 0, 5, 10), "B": rectangle(5, 0, 10, 10)}


@pytest.fixture
def stgrid():
    """Four time blocks of length 10 over two tiles of area 50."""
    rows = []
    for b in range(4):
        for tile in ("A", "B"):
            rows.append({"start": 10.0 * b, "stop": 10.0 * (b + 1), "tile": tile,
                         "area": 50.0, "popdensity": 1.0 if tile == "A" else 3.0})
    return pd.DataFrame(rows)


@pytest.fixture
def events():
    """40 events of two types, uniform over the window and the period."""
    rng = np.random.default_rng(3)
    n = 40
    x = rng.uniform(0.1, 9.9, n)
    return pd.DataFrame({
        "time": np.sort(rng.uniform(0.5, 39.5, n)),
        "x": x,
        "y": rng.uniform(0.1, 9.9, n),
        "type": np.where(np.arange(n) % 3 == 0, "B", "C"),
        "eps_t": 5.0,
        "eps_s": 3.0,
        "tile": np.where(x < 5, "A", "B"),
        "age": rng.integers(0, 80, n),
    })


@pytest.fixture
def point_pattern(events, window, stgrid, tiles):
    return build_point_pattern(events, window, stgrid, tiles=tiles)


@pytest.fixture
def individuals():
    """30 individuals on a lattice; households of three share a location."""
    n = 30
    household = np.arange(n) // 3
    tI = np.full(n, np.nan)
    tI[:len(INFECTION_TIMES)] = INFECTION_TIMES
    return pd.DataFrame({
        "id": [f"p{k + 1}" for k in range(n)],
        "x": (household % 5).astype(float),
        "y": (household // 5).astype(float),
        "hh": household,
        "cl": np.where(np.arange(n) % 2 == 0, 1, 2),
        "tI": tI,
        "tR": tI + INFECTIOUS_PERIOD,
    })


@pytest.fixture
def bases():
    return {
        "household": DistanceBasis(0.0, 0.0, True, True),
        "nothousehold": DistanceBasis(0.0, np.inf, False, False),
    }


@pytest.fixture
def event_history(individuals, bases):
    return build_event_history(individuals, t0=0.0, basis_fns=bases, T=20.0)


def fixture_path(name):
    """Path of an exported reference dataset; skips the test when it is absent."""
    path = os.path.join(FIXTURES, name)
    if not os.path.exists(path):
        pytest.skip(f"fixture {name} not available")
    return path
