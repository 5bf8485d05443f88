"""
Forward simulation from fitted twinstim models.

Endemic events are drawn cell by cell from the piecewise-constant rate.
Every event then spawns offspring as an independent Poisson process with
intensity eta_j f(|s - s_j|) g(t - t_j) on its influence region; offspring
times come from thinning a homogeneous process at the bound sup g.
"""
import logging
from typing import Dict, List, Mapping, Optional

import numpy as np
import pandas as pd

from ..config.models import SimConfig
from ..core.parallel import parallel_map
from ..core.random import replicate_streams
from ..data.points import EVENT_COLUMNS, PointPattern, build_point_pattern
from ..geometry import PolygonSet, intersect_poly_disc, point_in_polygon
from ..models.twinstim import TwinstimFit
from .sampling import MAX_REJECTIONS, sample_kernel_location, uniform_in_polygon

logger = logging.getLogger("ee-models.simulation")

SOURCE_ENDEMIC = 0
SOURCE_PREHISTORY = -1


class _Replicate:
    """State of one simulated pattern."""

    def __init__(self, sim: "TwinstimSimulator", rng: np.random.Generator):
        self.sim = sim
        self.rng = rng
        self.rows: List[Dict] = []
        self.parent: List[int] = []  # position in ``rows`` or a SOURCE_* code
        self.eta: List[float] = []
        self.regions: List[PolygonSet] = []

    def add(self, row: Dict, parent: int, eta: float, region: PolygonSet) -> int:
        self.rows.append(row)
        self.parent.append(parent)
        self.eta.append(eta)
        self.regions.append(region)
        return len(self.rows) - 1


class TwinstimSimulator:
    """Simulate new point patterns from a twinstim fit."""

    def __init__(self, fit: TwinstimFit, config: SimConfig,
                 tiles: Optional[Mapping[str, PolygonSet]] = None):
        self.fit = fit
        self.config = config
        self.model = fit.model
        self.pattern = pattern = fit.pattern
        self.theta = fit.coefficients
        self.t0, self.T = config.timeWindow or (pattern.t0, pattern.T)
        if self.t0 < pattern.t0 or self.T > pattern.T:
            raise ValueError(f"timeWindow ({self.t0}, {self.T}) exceeds the stgrid period "
                             f"({pattern.t0}, {pattern.T}]")
        self.tiles = self._tile_polygons(tiles)
        self.donors = pattern.raw_events().drop(columns=["time", "x", "y", "tile"],
                                                errors="ignore")
        self.donors = self.donors.drop(columns=["source"], errors="ignore")
        self.ps = self.theta[self.model.sl_siaf]
        self.pt = self.theta[self.model.sl_tiaf]

    def _tile_polygons(self, tiles: Optional[Mapping[str, PolygonSet]]) -> Dict[str, PolygonSet]:
        tile_ids = self.pattern.tile_ids
        source = tiles if tiles is not None else self.pattern.tiles
        if source is None:
            if len(tile_ids) == 1:
                return {tile_ids[0]: self.pattern.W}
            raise ValueError("tile polygons not found; simulation needs the geometry "
                             "of every stgrid tile")
        polygons = {str(k): v for k, v in source.items()}
        absent = [t for t in tile_ids if t not in polygons]
        if absent:
            raise ValueError(f"tile '{absent[0]}' has no polygon")
        return polygons

    def _grid_row(self, s: np.ndarray, t: float) -> Optional[int]:
        grid = self.pattern.stgrid
        block = int(np.searchsorted(self.pattern.block_bounds[:, 1], t, side="left"))
        for tile, poly in self.tiles.items():
            if point_in_polygon(poly, s):
                rows = np.flatnonzero((grid["BLOCK"].to_numpy() == block)
                                      & (grid["tile"].to_numpy() == tile))
                return int(rows[0])
        return None

    def _marks(self, type_label: str, rng: np.random.Generator) -> Dict:
        """Empirical marks: a random observed event of the same type (any type if none)."""
        pool = self.donors[self.donors["type"] == type_label]
        if pool.empty:
            pool = self.donors
        if pool.empty:
            raise ValueError("no observed events to draw marks from")
        row = pool.iloc[int(rng.integers(len(pool)))].to_dict()
        row["type"] = type_label
        return row

    def _event_eta(self, row: Dict, grid_row: int) -> float:
        if not self.model.has_epidemic:
            return 0.0
        frame = {**row, **{c: self.pattern.stgrid[c].iloc[grid_row]
                           for c in self.pattern.grid_columns}}
        return float(self.model.eta_for(self.theta, pd.DataFrame([frame]))[0])

    def _region(self, s: np.ndarray, eps_s: float) -> PolygonSet:
        return intersect_poly_disc(self.pattern.W, (float(s[0]), float(s[1])), eps_s,
                                   self.pattern.n_circle).translate(-s[0], -s[1])

    def _prehistory(self, rep: _Replicate) -> None:
        pattern, model = self.pattern, self.model
        keep = np.flatnonzero(pattern.times <= self.t0)
        eta = model.eta(self.theta)
        raw = pattern.raw_events().drop(columns=["source"], errors="ignore")
        for k in keep:
            rep.add(raw.iloc[k].to_dict(), SOURCE_PREHISTORY, float(eta[k]),
                    pattern.influence_regions[k])

    def _endemic(self, rep: _Replicate) -> None:
        grid = self.pattern.stgrid
        rates = self.model.endemic_rates(self.theta)
        start = np.maximum(grid["start"].to_numpy(dtype=float), self.t0)
        stop = np.minimum(grid["stop"].to_numpy(dtype=float), self.T)
        duration = np.clip(stop - start, 0.0, None)
        area = grid["area"].to_numpy(dtype=float)
        counts = rep.rng.poisson(rates * (area * duration)[:, None])
        for row, kk in zip(*np.nonzero(counts)):
            n = int(counts[row, kk])
            tile = grid["tile"].iloc[row]
            times = rep.rng.uniform(start[row], stop[row], size=n)
            coords = uniform_in_polygon(self.tiles[tile], n, rep.rng)
            for t, s in zip(times, coords):
                marks = self._marks(self.pattern.types[kk], rep.rng)
                event = {**marks, "time": float(t), "x": float(s[0]), "y": float(s[1]),
                         "tile": tile}
                rep.add(event, SOURCE_ENDEMIC, self._event_eta(event, int(row)),
                        self._region(s, float(event["eps_s"])))

    def _offspring(self, rep: _Replicate, j: int) -> List[int]:
        """Children of event j within the simulation window."""
        model, rng = self.model, rep.rng
        parent = rep.rows[j]
        t_j = float(parent["time"])
        s_j = np.array([parent["x"], parent["y"]], dtype=float)
        first = max(t_j, self.t0)
        last = min(t_j + float(parent["eps_t"]), self.T)
        region = rep.regions[j]
        allowed = np.flatnonzero(self.pattern.qmatrix[self.pattern.types.index(
            str(parent["type"]))])
        if last <= first or rep.eta[j] <= 0 or region.is_empty or allowed.size == 0:
            return []
        spatial = model.siaf.integrate(region, self.ps, self.fit.spec.finalTol)
        bound = model.tiaf.sup(first - t_j, self.pt)
        rate = rep.eta[j] * allowed.size * spatial * bound
        if rate <= 0:
            return []
        n = rng.poisson(rate * (last - first))
        times = np.sort(rng.uniform(first, last, size=n))
        children = []
        radius = min(float(parent["eps_s"]), region.max_distance())
        for t in times:
            g = float(model.tiaf.g(np.array([t - t_j]), self.pt)[0])
            if self.config.debug and g > bound * (1 + 1e-12):
                raise RuntimeError(f"thinning bound {bound} violated by g = {g} "
                                   f"at lag {t - t_j}")
            if rng.uniform() * bound > g:
                continue
            offset = self._sample_offset(region, radius, rng)
            s = s_j + offset
            row = self._grid_row(s, float(t))
            if row is None:
                continue
            marks = self._marks(self.pattern.types[int(rng.choice(allowed))], rng)
            tile = self.pattern.stgrid["tile"].iloc[row]
            event = {**marks, "time": float(t), "x": float(s[0]), "y": float(s[1]),
                     "tile": tile}
            children.append(rep.add(event, j, self._event_eta(event, row),
                                    self._region(s, float(event["eps_s"]))))
        return children

    def _sample_offset(self, region: PolygonSet, radius: float,
                       rng: np.random.Generator) -> np.ndarray:
        for _ in range(MAX_REJECTIONS):
            offset = sample_kernel_location(self.model.siaf, self.ps, radius, rng)[0]
            if point_in_polygon(region, offset):
                return offset
        raise RuntimeError("kernel location sampling did not hit the influence region")

    def replicate(self, rng: np.random.Generator) -> PointPattern:
        rep = _Replicate(self, rng)
        self._prehistory(rep)
        self._endemic(rep)
        if self.model.has_epidemic:
            queue = list(range(len(rep.rows)))
            while queue:
                queue.extend(self._offspring(rep, queue.pop(0)))
        return self._to_pattern(rep)

    def _to_pattern(self, rep: _Replicate) -> PointPattern:
        columns = list(dict.fromkeys([*EVENT_COLUMNS, "tile", *self.donors.columns]))
        events = pd.DataFrame(rep.rows, columns=columns)
        order = np.argsort(events["time"].to_numpy(dtype=float), kind="stable")
        position = np.empty(len(order), dtype=np.int64)
        position[order] = np.arange(1, len(order) + 1)
        parent = np.asarray(rep.parent, dtype=np.int64)
        events["source"] = np.where(parent >= 0, position[np.maximum(parent, 0)], parent)
        qmatrix = pd.DataFrame(self.pattern.qmatrix, index=list(self.pattern.types),
                               columns=list(self.pattern.types))
        return build_point_pattern(events, self.pattern.W, self.pattern.stgrid, qmatrix,
                                   n_circle=self.pattern.n_circle, tiles=self.tiles,
                                   pop_column=self.pattern.pop_column)


def simulate_twinstim(fit: TwinstimFit, config: SimConfig,
                      tiles: Optional[Mapping[str, PolygonSet]] = None) -> List[PointPattern]:
    """Simulate ``config.nsim`` patterns over ``config.timeWindow``.

    Observed events up to the window start act as prehistory (source -1);
    endemic events have source 0 and offspring the 1-based position of their
    parent in the returned pattern.

    Raises:
        ValueError: If tile polygons are missing or the window exceeds the stgrid
    """
    simulator = TwinstimSimulator(fit, config, tiles)
    logger.info(f"simulating {config.nsim} twinstim patterns over "
                f"({simulator.t0}, {simulator.T}]")
    return parallel_map(simulator.replicate, replicate_streams(config.seed, config.nsim),
                        config.threads)
