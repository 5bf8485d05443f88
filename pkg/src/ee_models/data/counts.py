"""
Multivariate count time series (time x unit grid of counts).
"""
from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..geometry import PolygonSet, nb_order

ROW_SUM_TOLERANCE = 1e-10


@dataclass(frozen=True)
class CountSeries:
    """Counts Y_it with population fractions, neighbourhood orders and an optional map.

    ``covariates`` holds additional T x U grids addressable by name in model
    formulas (e.g. a susceptible proportion).
    """

    counts: np.ndarray
    start: Tuple[int, int]
    freq: int
    pop_frac: np.ndarray
    nb_order: np.ndarray
    unit_ids: Tuple[str, ...]
    map: Optional[Dict[str, PolygonSet]] = None
    covariates: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_time(self) -> int:
        return int(self.counts.shape[0])

    @property
    def n_units(self) -> int:
        return int(self.counts.shape[1])

    def epoch_labels(self) -> list[str]:
        """"year/index" label per time point."""
        year, index = self.start
        labels = []
        for k in range(self.n_time):
            pos = index - 1 + k
            labels.append(f"{year + pos // self.freq}/{pos % self.freq + 1}")
        return labels

    def with_covariates(self, covariates: Mapping[str, np.ndarray]) -> "CountSeries":
        grids = dict(self.covariates)
        for name, grid in covariates.items():
            grids[name] = _as_grid(grid, self.counts.shape, name)
        return replace(self, covariates=grids)


def _as_grid(values: np.ndarray, shape: Tuple[int, int], name: str) -> np.ndarray:
    """Broadcast a per-unit vector over time; check the grid shape."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        if arr.shape[0] != shape[1]:
            raise ValueError(f"{name} has {arr.shape[0]} entries for {shape[1]} units")
        arr = np.tile(arr, (shape[0], 1))
    if arr.shape != shape:
        raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
    return arr


def validate_counts(
    raw_counts: np.ndarray,
    start: Tuple[int, int],
    freq: int,
    pop_frac: Optional[np.ndarray],
    adjacency_or_order: Optional[np.ndarray],
    unit_ids: Optional[Sequence[str]] = None,
    map: Optional[Mapping[str, PolygonSet]] = None,
    covariates: Optional[Mapping[str, np.ndarray]] = None,
) -> CountSeries:
    """Build a CountSeries, checking every invariant.

    Args:
        raw_counts: T x U nonnegative integer counts
        start: (year, sample index) of the first row
        freq: Samples per year
        pop_frac: T x U grid or per-unit vector of population fractions;
            None means equal fractions
        adjacency_or_order: U x U boolean adjacency (converted to orders) or an
            integer order matrix; None means no neighbours
        unit_ids: Unit labels (default "1".."U")
        map: Optional polygons keyed by unit id
        covariates: Optional named T x U grids

    Returns:
        Validated CountSeries

    Raises:
        ValueError: On negative or non-integer counts, bad popFrac rows,
            or dimension mismatches
    """
    counts = np.asarray(raw_counts, dtype=float)
    if counts.ndim == 1:
        counts = counts[:, None]
    if counts.ndim != 2:
        raise ValueError(f"counts must be a T x U grid, got {counts.ndim} dimensions")
    if np.any(~np.isfinite(counts)) or np.any(counts < 0):
        t, i = np.argwhere(~(counts >= 0))[0]
        raise ValueError(f"invalid count {counts[t, i]} at time {t + 1}, unit {i + 1}")
    if np.any(counts != np.round(counts)):
        t, i = np.argwhere(counts != np.round(counts))[0]
        raise ValueError(f"non-integer count {counts[t, i]} at time {t + 1}, unit {i + 1}")
    n_time, n_units = counts.shape

    ids = tuple(str(u) for u in unit_ids) if unit_ids is not None else tuple(
        str(k + 1) for k in range(n_units))
    if len(ids) != n_units:
        raise ValueError(f"{len(ids)} unit ids for {n_units} count columns")
    if len(set(ids)) != len(ids):
        raise ValueError("unit ids must be unique")
    if freq < 1:
        raise ValueError(f"freq must be positive, got {freq}")

    if pop_frac is None:
        pop = np.full(counts.shape, 1.0 / n_units)
    else:
        pop = _as_grid(pop_frac, counts.shape, "popFrac")
        if np.any(pop < 0):
            raise ValueError("popFrac must be nonnegative")
        bad = np.flatnonzero(np.abs(pop.sum(axis=1) - 1) > ROW_SUM_TOLERANCE)
        if bad.size:
            raise ValueError(f"popFrac row {bad[0] + 1} sums to {pop[bad[0]].sum()!r}, not 1")

    if adjacency_or_order is None:
        order = np.zeros((n_units, n_units), dtype=np.int64)
    else:
        matrix = np.asarray(adjacency_or_order)
        if matrix.shape != (n_units, n_units):
            raise ValueError(f"neighbourhood matrix has shape {matrix.shape}, "
                             f"expected ({n_units}, {n_units})")
        if matrix.dtype == bool or np.isin(matrix, (0, 1)).all():
            order = nb_order(matrix.astype(bool))
        else:
            if np.any(matrix < 0) or np.any(matrix != np.round(matrix)):
                raise ValueError("neighbourhood orders must be nonnegative integers")
            order = matrix.astype(np.int64)

    tiles = None
    if map is not None:
        missing = [u for u in ids if u not in map]
        if missing:
            raise ValueError(f"map has no polygon for unit '{missing[0]}'")
        tiles = {u: map[u] for u in ids}

    grids = {}
    for name, grid in (covariates or {}).items():
        grids[name] = _as_grid(grid, counts.shape, name)

    return CountSeries(
        counts=counts.astype(np.int64),
        start=(int(start[0]), int(start[1])),
        freq=int(freq),
        pop_frac=pop,
        nb_order=order,
        unit_ids=ids,
        map=tiles,
        covariates=grids,
    )


def aggregate_counts(series: CountSeries, nfreq: int) -> CountSeries:
    """Aggregate to a coarser sampling frequency (e.g. weekly to biweekly with nfreq=26).

    Counts are summed within each period; popFrac and covariates are taken
    from the first row of the period.

    Raises:
        ValueError: If nfreq does not divide freq or the series ends in an
            incomplete period
    """
    if nfreq < 1 or series.freq % nfreq:
        raise ValueError(f"nfreq {nfreq} must divide freq {series.freq}")
    width = series.freq // nfreq
    if series.n_time % width:
        raise ValueError(f"{series.n_time} time points do not split into periods of {width}")
    n_new = series.n_time // width
    counts = series.counts.reshape(n_new, width, series.n_units).sum(axis=1)
    first = slice(0, None, width)
    year, index = series.start
    return CountSeries(
        counts=counts,
        start=(year, (index - 1) // width + 1),
        freq=nfreq,
        pop_frac=series.pop_frac[first],
        nb_order=series.nb_order,
        unit_ids=series.unit_ids,
        map=series.map,
        covariates={k: v[first] for k, v in series.covariates.items()},
    )
