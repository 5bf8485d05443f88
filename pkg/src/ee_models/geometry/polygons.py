"""
Polygon sets on a planar coordinate system.

A PolygonSet wraps a shapely (Multi)Polygon with normalized orientation
(outer rings counter-clockwise, holes clockwise). It is the geometry type of
the observation window W, of the tiles, and of the per-event influence
regions.
"""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np
import shapely
from shapely import affinity
from shapely.errors import GEOSException
from shapely.geometry import MultiPolygon, Polygon, shape
from shapely.geometry.base import BaseGeometry
from shapely.geometry.polygon import orient
from shapely.ops import unary_union

Coords = Union[Sequence[Sequence[float]], np.ndarray]


def _polygonal_parts(geom: BaseGeometry) -> List[Polygon]:
    """Polygon parts of any geometry, dropping lines and points."""
    parts = []
    for part in shapely.get_parts(geom):
        if isinstance(part, Polygon) and not part.is_empty:
            parts.append(part)
        elif isinstance(part, MultiPolygon):
            parts.extend(p for p in part.geoms if not p.is_empty)
        elif part.geom_type == "GeometryCollection":
            parts.extend(_polygonal_parts(part))
    return parts


@dataclass(frozen=True)
class PolygonSet:
    """Union of simple polygons, possibly with holes."""

    geometry: BaseGeometry

    def __post_init__(self) -> None:
        parts = _polygonal_parts(self.geometry)
        for part in parts:
            for ring in [part.exterior, *part.interiors]:
                if len(np.unique(np.asarray(ring.coords)[:-1], axis=0)) < 3:
                    raise ValueError("degenerate ring with fewer than 3 vertices")
        geom: BaseGeometry = MultiPolygon([orient(p, sign=1.0) for p in parts])
        if not geom.is_valid:
            raise ValueError(f"invalid polygon: {shapely.is_valid_reason(geom)}")
        object.__setattr__(self, "geometry", geom)

    @classmethod
    def from_rings(cls, outer: Coords, holes: Iterable[Coords] = ()) -> "PolygonSet":
        """Single polygon from an outer ring and optional holes."""
        try:
            return cls(Polygon(outer, list(holes)))
        except (ValueError, GEOSException) as e:
            raise ValueError(f"degenerate ring: {e}") from e

    @classmethod
    def from_geojson(cls, obj: Mapping[str, Any]) -> "PolygonSet":
        """From a GeoJSON Feature or geometry object."""
        geometry = obj.get("geometry", obj)
        if geometry.get("type") not in ("Polygon", "MultiPolygon"):
            kind = geometry.get("type")
            raise ValueError(f"expected Polygon or MultiPolygon geometry, got {kind}")
        return cls(shape(geometry))

    @classmethod
    def union(cls, sets: Iterable["PolygonSet"]) -> "PolygonSet":
        return cls(unary_union([s.geometry for s in sets]))

    @property
    def polygons(self) -> List[Polygon]:
        return list(self.geometry.geoms)

    @property
    def is_empty(self) -> bool:
        return self.geometry.is_empty

    @cached_property
    def rings(self) -> List[Tuple[np.ndarray, bool]]:
        """Closed coordinate loops with a hole flag (outer CCW, holes CW)."""
        out = []
        for poly in self.polygons:
            out.append((np.asarray(poly.exterior.coords), False))
            out.extend((np.asarray(r.coords), True) for r in poly.interiors)
        return out

    @cached_property
    def bbox(self) -> Tuple[float, float, float, float]:
        if self.is_empty:
            return (math.nan, math.nan, math.nan, math.nan)
        return tuple(float(v) for v in self.geometry.bounds)  # type: ignore[return-value]

    @cached_property
    def area(self) -> float:
        return polygon_area(self)

    def translate(self, dx: float, dy: float) -> "PolygonSet":
        return PolygonSet(affinity.translate(self.geometry, dx, dy))

    def max_distance(self, origin: Tuple[float, float] = (0.0, 0.0)) -> float:
        """Largest distance from ``origin`` to any point of the set."""
        if self.is_empty:
            return 0.0
        coords = np.concatenate([ring for ring, _ in self.rings])
        return float(np.max(np.hypot(coords[:, 0] - origin[0], coords[:, 1] - origin[1])))


def polygon_area(p: PolygonSet) -> float:
    """Area by the signed shoelace formula; holes subtract via orientation."""
    total = 0.0
    for ring, _ in p.rings:
        x, y = ring[:-1, 0], ring[:-1, 1]
        total += 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
    return max(total, 0.0)


def point_in_polygon(p: PolygonSet, pt: Coords) -> Union[bool, np.ndarray]:
    """Inside test for one point (x, y) or an (n, 2) array; the boundary counts as inside."""
    xy = np.asarray(pt, dtype=float)
    points = shapely.points(xy)
    inside = shapely.covers(p.geometry, points)
    if xy.ndim == 1:
        return bool(inside)
    return np.asarray(inside, dtype=bool)


def disc_polygon(center: Tuple[float, float], radius: float, n_vertices: int = 16) -> Polygon:
    """Regular n-gon inscribed in the disc."""
    angles = 2 * np.pi * np.arange(n_vertices) / n_vertices
    return Polygon(np.column_stack([center[0] + radius * np.cos(angles),
                                    center[1] + radius * np.sin(angles)]))


def inscribed_area_factor(n_vertices: int) -> float:
    """Area of the inscribed regular n-gon relative to the disc."""
    return n_vertices / (2 * np.pi) * np.sin(2 * np.pi / n_vertices)


def intersect_poly_disc(
    p: PolygonSet,
    center: Tuple[float, float],
    radius: float,
    n_vertices: int = 16,
) -> PolygonSet:
    """Intersect a polygon set with the inscribed n-gon of a disc.

    Args:
        p: Polygon set (e.g. the observation window W)
        center: Disc center
        radius: Disc radius; ``inf`` returns ``p`` unchanged
        n_vertices: Number of polygon vertices approximating the disc (>= 8)

    Returns:
        The intersection; empty when the disc lies outside ``p``

    Raises:
        ValueError: If radius <= 0 or n_vertices < 8
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if n_vertices < 8:
        raise ValueError(f"nVertices must be at least 8, got {n_vertices}")
    if math.isinf(radius):
        return p

    cx, cy = float(center[0]), float(center[1])
    for _ in range(3):
        disc = disc_polygon((cx, cy), radius, n_vertices)
        try:
            result = p.geometry.intersection(disc)
            if result.is_valid:
                return PolygonSet(result)
        except (GEOSException, ValueError):
            pass
        # collinear disc vertex and window edge: nudge the center
        cx += 1e-9
        cy += 1e-9
    raise ValueError(f"polygon/disc intersection failed at center {center}")
