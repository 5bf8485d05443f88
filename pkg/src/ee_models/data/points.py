"""
Spatio-temporal marked point patterns.

A PointPattern holds geo-referenced, time-stamped events of K types
together with the observation window W, the piecewise-constant space-time
covariate grid (stgrid), the type-transmission matrix and the centered
influence region of every event.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.spatial.distance import pdist

from ..core.random import make_rng
from ..geometry import (
    PolygonSet,
    adjacency_from_map,
    intersect_poly_disc,
    point_in_polygon,
)
from .counts import CountSeries, validate_counts

logger = logging.getLogger("ee-models.data")

EVENT_COLUMNS = ("time", "x", "y", "type", "eps_t", "eps_s")
STGRID_COLUMNS = ("start", "stop", "tile", "area")
AREA_TOLERANCE = 0.005
DERIVED_COLUMNS = ("BLOCK", "grid_row")


@dataclass(frozen=True)
class PointPattern:
    """Events with their observation window, covariate grid and influence regions.

    ``events`` is sorted by time and carries the derived columns BLOCK (time
    block index) and grid_row (row of ``stgrid`` containing the event) plus
    copies of the grid covariates listed in ``grid_columns``.
    """

    events: pd.DataFrame
    W: PolygonSet
    stgrid: pd.DataFrame
    qmatrix: np.ndarray
    types: Tuple[str, ...]
    T: float
    t0: float
    influence_regions: Tuple[PolygonSet, ...]
    n_circle: int = 16
    tiles: Optional[Dict[str, PolygonSet]] = None
    mark_columns: Tuple[str, ...] = ()
    grid_columns: Tuple[str, ...] = ()
    pop_column: str = "popdensity"

    @property
    def n_events(self) -> int:
        return len(self.events)

    @property
    def coords(self) -> np.ndarray:
        return self.events[["x", "y"]].to_numpy(dtype=float)

    @property
    def times(self) -> np.ndarray:
        return self.events["time"].to_numpy(dtype=float)

    @property
    def type_codes(self) -> np.ndarray:
        index = {k: i for i, k in enumerate(self.types)}
        return np.array([index[k] for k in self.events["type"].astype(str)], dtype=np.int64)

    @property
    def tile_ids(self) -> List[str]:
        return list(pd.unique(self.stgrid["tile"]))

    @property
    def block_bounds(self) -> np.ndarray:
        """(n_blocks, 2) array of (start, stop]."""
        blocks = self.stgrid.drop_duplicates("BLOCK").sort_values("BLOCK")
        return blocks[["start", "stop"]].to_numpy(dtype=float)

    def raw_events(self) -> pd.DataFrame:
        """Events without the derived and copied grid columns."""
        drop = [c for c in (*DERIVED_COLUMNS, *self.grid_columns) if c in self.events]
        return self.events.drop(columns=drop)


def _prepare_stgrid(stgrid: pd.DataFrame) -> pd.DataFrame:
    missing = [c for c in STGRID_COLUMNS if c not in stgrid.columns]
    if missing:
        raise ValueError(f"stgrid is missing column '{missing[0]}'")
    grid = stgrid.copy()
    grid["tile"] = grid["tile"].astype(str)
    blocks = grid[["start", "stop"]].drop_duplicates().sort_values("start").to_numpy(float)
    if np.any(blocks[:, 1] <= blocks[:, 0]):
        raise ValueError("stgrid has a block with stop <= start")
    if np.any(np.abs(blocks[1:, 0] - blocks[:-1, 1]) > 1e-9):
        raise ValueError("stgrid time blocks are not consecutive")
    if len(np.unique(blocks[:, 0])) != len(blocks):
        raise ValueError("stgrid blocks with the same start must share the stop time")
    block_of = {float(s): k for k, s in enumerate(blocks[:, 0])}
    grid["BLOCK"] = [block_of[float(s)] for s in grid["start"]]
    grid = grid.sort_values(["BLOCK", "tile"]).reset_index(drop=True)

    tiles = set(grid["tile"])
    per_block = grid.groupby("BLOCK")["tile"].agg(lambda s: set(s))
    for b, present in per_block.items():
        if present != tiles:
            absent = sorted(tiles - present)
            raise ValueError(f"stgrid block {b + 1} does not cover tile '{absent[0]}'")
    if grid.duplicated(["BLOCK", "tile"]).any():
        raise ValueError("stgrid has duplicated (block, tile) rows")
    if np.any(grid["area"].to_numpy(float) <= 0):
        raise ValueError("stgrid tile areas must be positive")
    return grid


def _influence_regions(
    W: PolygonSet, coords: np.ndarray, eps_s: np.ndarray, n_circle: int
) -> Tuple[PolygonSet, ...]:
    regions = []
    for (x, y), radius in zip(coords, eps_s):
        region = intersect_poly_disc(W, (x, y), float(radius), n_circle)
        regions.append(region.translate(-x, -y))
    return tuple(regions)


def _assemble(
    events: pd.DataFrame,
    W: PolygonSet,
    grid: pd.DataFrame,
    qmatrix: np.ndarray,
    types: Tuple[str, ...],
    n_circle: int,
    tiles: Optional[Dict[str, PolygonSet]],
    pop_column: str,
    regions: Optional[Tuple[PolygonSet, ...]] = None,
) -> PointPattern:
    """Resolve grid cells, copy grid covariates and compute influence regions."""
    blocks = grid[["BLOCK", "start", "stop"]].drop_duplicates("BLOCK").sort_values("BLOCK")
    starts = blocks["start"].to_numpy(float)
    stops = blocks["stop"].to_numpy(float)
    t0, T = float(starts[0]), float(stops[-1])

    events = events.sort_values("time", kind="stable").reset_index(drop=True)
    times = events["time"].to_numpy(float)
    outside = np.flatnonzero((times <= t0) | (times > T))
    if outside.size:
        k = outside[0]
        raise ValueError(f"event {k + 1} at time {times[k]} is outside ({t0}, {T}]")

    block = np.searchsorted(stops, times, side="left")
    row_of = {(int(b), t): k for k, (b, t) in enumerate(zip(grid["BLOCK"], grid["tile"]))}
    grid_rows = []
    for k, (b, tile) in enumerate(zip(block, events["tile"])):
        row = row_of.get((int(b), tile))
        if row is None:
            raise ValueError(f"event {k + 1} has tile '{tile}' not found in stgrid")
        grid_rows.append(row)

    covariate_cols = [c for c in grid.columns if c not in (*STGRID_COLUMNS, "BLOCK")]
    marks = [c for c in events.columns
             if c not in (*EVENT_COLUMNS, "tile", *DERIVED_COLUMNS)]
    clash = [c for c in covariate_cols if c in marks]
    if clash:
        raise ValueError(f"event mark '{clash[0]}' clashes with an stgrid column")

    out = events.copy()
    out["BLOCK"] = block.astype(np.int64)
    out["grid_row"] = np.asarray(grid_rows, dtype=np.int64)
    for col in covariate_cols:
        out[col] = grid[col].to_numpy()[out["grid_row"].to_numpy()]

    coords = out[["x", "y"]].to_numpy(float)
    if regions is None:
        regions = _influence_regions(W, coords, out["eps_s"].to_numpy(float), n_circle)

    return PointPattern(
        events=out,
        W=W,
        stgrid=grid,
        qmatrix=qmatrix,
        types=types,
        T=T,
        t0=t0,
        influence_regions=regions,
        n_circle=n_circle,
        tiles=tiles,
        mark_columns=tuple(marks),
        grid_columns=tuple(covariate_cols),
        pop_column=pop_column,
    )


def build_point_pattern(
    events: pd.DataFrame,
    W: PolygonSet,
    stgrid: pd.DataFrame,
    qmatrix: Optional[Union[np.ndarray, pd.DataFrame]] = None,
    n_circle: int = 16,
    tiles: Optional[Mapping[str, PolygonSet]] = None,
    types: Optional[Sequence[str]] = None,
    pop_column: str = "popdensity",
) -> PointPattern:
    """Check and assemble a PointPattern.

    Args:
        events: One row per event with columns time, x, y, type, eps_t, eps_s
            and tile (or ``tiles`` to locate events), plus mark columns
        W: Observation window in the same planar coordinates
        stgrid: Rows (start, stop, tile, area, covariates...) covering every
            tile in every consecutive time block
        qmatrix: K x K boolean transmission matrix (types in row order); a
            DataFrame supplies the type labels through its index.
            Default: identity over the observed types
        n_circle: Vertices of the polygonal disc approximation (>= 8)
        tiles: Optional tile polygons (needed for simulation)
        types: Type labels in qmatrix order
        pop_column: stgrid column with population density

    Returns:
        PointPattern sorted by time

    Raises:
        ValueError: On missing columns, events outside (t0, T] or W, tiles
            absent from stgrid, inconsistent areas or a malformed qmatrix
    """
    missing = [c for c in EVENT_COLUMNS if c not in events.columns]
    if missing:
        raise ValueError(f"events are missing column '{missing[0]}'")
    if n_circle < 8:
        raise ValueError(f"nCircle2Poly must be at least 8, got {n_circle}")
    ev = events.copy()
    ev["type"] = ev["type"].astype(str)

    tile_map = {str(k): v for k, v in tiles.items()} if tiles is not None else None
    if "tile" not in ev.columns:
        if tile_map is None:
            raise ValueError("events need a 'tile' column or tile polygons to locate them")
        ev["tile"] = _locate_tiles(ev[["x", "y"]].to_numpy(float), tile_map)
    ev["tile"] = ev["tile"].astype(str)

    for col in ("eps_t", "eps_s"):
        values = ev[col].to_numpy(float)
        if np.any(~(values > 0)):
            k = int(np.flatnonzero(~(values > 0))[0])
            raise ValueError(f"event {k + 1} has invalid {col} {values[k]}")

    if isinstance(qmatrix, pd.DataFrame):
        type_labels = tuple(str(k) for k in qmatrix.index)
        q = qmatrix.to_numpy()
    else:
        type_labels = tuple(str(k) for k in types) if types is not None else tuple(
            sorted(pd.unique(ev["type"])))
        q = np.eye(len(type_labels), dtype=bool) if qmatrix is None else np.asarray(qmatrix)
    K = len(type_labels)
    if q.shape != (K, K):
        raise ValueError(f"qmatrix must be {K} x {K} for types {list(type_labels)}, "
                         f"got shape {q.shape}")
    if q.dtype != bool and not np.isin(q, (0, 1)).all():
        raise ValueError("qmatrix must be boolean")
    unknown = sorted(set(ev["type"]) - set(type_labels))
    if unknown:
        raise ValueError(f"event type '{unknown[0]}' not found in qmatrix types")

    grid = _prepare_stgrid(stgrid)
    tile_ids = list(pd.unique(grid["tile"]))
    tile_area = float(grid.loc[grid["BLOCK"] == 0, "area"].sum())
    if abs(tile_area - W.area) > AREA_TOLERANCE * W.area:
        raise ValueError(f"sum of tile areas {tile_area:.6g} is inconsistent with "
                         f"area(W) {W.area:.6g}")
    if tile_map is not None:
        absent = [t for t in tile_ids if t not in tile_map]
        if absent:
            raise ValueError(f"tile '{absent[0]}' has no polygon")

    inside = np.asarray(point_in_polygon(W, ev[["x", "y"]].to_numpy(float)), dtype=bool)
    if not inside.all():
        k = int(np.flatnonzero(~inside)[0])
        raise ValueError(f"event {k + 1} lies outside the observation window W")

    pattern = _assemble(ev, W, grid, q.astype(bool), type_labels, n_circle, tile_map, pop_column)
    logger.debug(f"built point pattern with {pattern.n_events} events over "
                 f"{len(pattern.block_bounds)} time blocks x {len(tile_ids)} tiles")
    return pattern


def _locate_tiles(coords: np.ndarray, tiles: Mapping[str, PolygonSet]) -> List[str]:
    found: List[Optional[str]] = [None] * len(coords)
    for tile, poly in tiles.items():
        inside = np.atleast_1d(point_in_polygon(poly, coords))
        for k in np.flatnonzero(inside):
            if found[k] is None:
                found[k] = tile
    for k, tile in enumerate(found):
        if tile is None:
            raise ValueError(f"event {k + 1} lies in no tile")
    return [str(t) for t in found]


def _rebuild(pattern: PointPattern, events: pd.DataFrame, **changes: Any) -> PointPattern:
    return _assemble(
        events,
        pattern.W,
        pattern.stgrid,
        changes.get("qmatrix", pattern.qmatrix),
        pattern.types,
        changes.get("n_circle", pattern.n_circle),
        pattern.tiles,
        pattern.pop_column,
        regions=changes.get("regions"),
    )


def min_separation(pattern: PointPattern) -> float:
    """Smallest positive distance between two event locations."""
    if pattern.n_events < 2:
        return float("inf")
    d = pdist(pattern.coords)
    d = d[d > 0]
    return float(d.min()) if d.size else float("inf")


def untie(
    pattern: PointPattern,
    spatial_amount: float,
    temporal_amount: Optional[float] = None,
    seed: int = 0,
) -> PointPattern:
    """Break ties by random shifts.

    Events sharing a location are moved by independent uniform vectors of
    length at most ``spatial_amount``, redrawn until the new location lies in
    W and differs from every other event location. Moved events are assigned
    to their new tile when tile polygons are known. Events sharing a time
    point are moved back by U(0, temporal_amount).

    Raises:
        ValueError: If an amount is negative
    """
    if spatial_amount < 0:
        raise ValueError(f"spatial amount must be nonnegative, got {spatial_amount}")
    if temporal_amount is not None and temporal_amount < 0:
        raise ValueError(f"temporal amount must be nonnegative, got {temporal_amount}")
    rng = make_rng(seed)
    events = pattern.raw_events()
    moved_space = False

    if spatial_amount > 0:
        tied = np.flatnonzero(events.duplicated(["x", "y"], keep=False).to_numpy())
        coords = events[["x", "y"]].to_numpy(float)
        moving = set(tied.tolist())
        taken = {(x, y) for k, (x, y) in enumerate(coords) if k not in moving}
        for k in tied:
            for _ in range(1000):
                r = spatial_amount * np.sqrt(rng.uniform())
                theta = rng.uniform(0, 2 * np.pi)
                candidate = coords[k] + r * np.array([np.cos(theta), np.sin(theta)])
                if (candidate[0], candidate[1]) not in taken and \
                        point_in_polygon(pattern.W, candidate):
                    coords[k] = candidate
                    taken.add((candidate[0], candidate[1]))
                    break
            else:
                raise RuntimeError(f"could not move event {k + 1} to a free location inside W")
        events["x"], events["y"] = coords[:, 0], coords[:, 1]
        if pattern.tiles is not None and tied.size:
            tiles = events["tile"].to_numpy(dtype=object, copy=True)
            tiles[tied] = _locate_tiles(coords[tied], pattern.tiles)
            events["tile"] = tiles
        moved_space = tied.size > 0
        logger.debug(f"untie moved {tied.size} tied locations by at most {spatial_amount}")

    if temporal_amount:
        tied = np.flatnonzero(events.duplicated(["time"], keep=False).to_numpy())
        times = events["time"].to_numpy(float)
        shift = rng.uniform(0, temporal_amount, size=tied.size)
        times[tied] = np.maximum(times[tied] - shift, pattern.t0 + 1e-12)
        events["time"] = times

    if not moved_space:
        # influence regions depend on the location only; keep them in event order
        order = events["time"].to_numpy(float).argsort(kind="stable")
        regions = tuple(pattern.influence_regions[k] for k in order)
        return _rebuild(pattern, events, regions=regions)
    return _rebuild(pattern, events)


def update_ranges(
    pattern: PointPattern,
    eps_s: Optional[float] = None,
    eps_t: Optional[float] = None,
    n_circle: Optional[int] = None,
) -> PointPattern:
    """Replace the interaction ranges of all events and recompute influence regions.

    Raises:
        ValueError: If a new range is not positive
    """
    for name, value in (("eps.s", eps_s), ("eps.t", eps_t)):
        if value is not None and not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")
    events = pattern.raw_events()
    if eps_t is not None:
        events["eps_t"] = float(eps_t)
    if eps_s is None and n_circle is None:
        return _rebuild(pattern, events, regions=pattern.influence_regions)
    if eps_s is not None:
        events["eps_s"] = float(eps_s)
    return _rebuild(pattern, events, n_circle=n_circle or pattern.n_circle)


def subset_pattern(
    pattern: PointPattern,
    types: Optional[Sequence[str]] = None,
    time_range: Optional[Tuple[float, float]] = None,
    where: Optional[np.ndarray] = None,
) -> PointPattern:
    """Keep events by type, time window (a, b] and/or a boolean mask.

    W, stgrid, qmatrix and the influence regions of kept events are unchanged.
    """
    keep = np.ones(pattern.n_events, dtype=bool)
    if types is not None:
        unknown = sorted(set(map(str, types)) - set(pattern.types))
        if unknown:
            raise ValueError(f"type '{unknown[0]}' not found in the pattern")
        keep &= pattern.events["type"].isin([str(t) for t in types]).to_numpy()
    if time_range is not None:
        a, b = time_range
        keep &= (pattern.times > a) & (pattern.times <= b)
    if where is not None:
        mask = np.asarray(where, dtype=bool)
        if mask.shape != keep.shape:
            raise ValueError(f"mask has {mask.size} entries for {pattern.n_events} events")
        keep &= mask
    events = pattern.raw_events()[keep]
    regions = tuple(r for r, k in zip(pattern.influence_regions, keep) if k)
    return _rebuild(pattern, events, regions=regions)


def aggregate_to_counts(
    pattern: PointPattern,
    freq: int,
    start: Tuple[int, int],
    tiles: Union[Sequence[str], Mapping[str, PolygonSet]],
) -> CountSeries:
    """Count events by time block (rows) and tile (columns).

    popFrac comes from sum(popdensity * area) per tile when the stgrid has
    the population column, equal fractions otherwise. A tile mapping also
    supplies the map and the neighbourhood orders.

    Raises:
        ValueError: If the tile keys differ from the stgrid tiles
    """
    unit_ids = [str(t) for t in tiles]
    grid_tiles = set(pattern.tile_ids)
    mismatch = sorted(set(unit_ids) ^ grid_tiles)
    if mismatch:
        raise ValueError(f"tile '{mismatch[0]}' is not shared by tiles and stgrid")

    n_blocks = len(pattern.block_bounds)
    col = {u: k for k, u in enumerate(unit_ids)}
    counts = np.zeros((n_blocks, len(unit_ids)), dtype=np.int64)
    np.add.at(counts, (pattern.events["BLOCK"].to_numpy(),
                       [col[t] for t in pattern.events["tile"]]), 1)

    grid = pattern.stgrid
    if pattern.pop_column in grid.columns:
        pop = np.zeros(counts.shape)
        np.add.at(pop, (grid["BLOCK"].to_numpy(), [col[t] for t in grid["tile"]]),
                  grid[pattern.pop_column].to_numpy(float) * grid["area"].to_numpy(float))
        pop /= pop.sum(axis=1, keepdims=True)
    else:
        pop = None

    tile_map = None
    adjacency = None
    if isinstance(tiles, Mapping):
        tile_map = {str(k): v for k, v in tiles.items()}
        adjacency = adjacency_from_map(tile_map, unit_ids)
    return validate_counts(counts, start, freq, pop, adjacency, unit_ids=unit_ids, map=tile_map)


def summarize_pattern(pattern: PointPattern) -> Dict[str, Any]:
    """Event counts by type, time range and grid dimensions."""
    times = pattern.times
    return {
        "events": pattern.n_events,
        "byType": {k: int((pattern.events["type"] == k).sum()) for k in pattern.types},
        "timeRange": (float(times.min()), float(times.max())) if times.size else None,
        "observationPeriod": (pattern.t0, pattern.T),
        "timeBlocks": len(pattern.block_bounds),
        "tiles": len(pattern.tile_ids),
        "areaW": pattern.W.area,
        "tiedLocations": int(pattern.events.duplicated(["x", "y"], keep=False).sum()),
        "nCircle2Poly": pattern.n_circle,
    }
