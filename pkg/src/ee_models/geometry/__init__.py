"""
Polygon arithmetic, neighbourhood orders and kernel cubature.
"""

from .cubature import kernel_cubature
from .neighbourhood import adjacency_from_edges, adjacency_from_map, nb_order
from .polygons import (
    PolygonSet,
    disc_polygon,
    inscribed_area_factor,
    intersect_poly_disc,
    point_in_polygon,
    polygon_area,
)

__all__ = [
    "PolygonSet",
    "adjacency_from_edges",
    "adjacency_from_map",
    "disc_polygon",
    "inscribed_area_factor",
    "intersect_poly_disc",
    "kernel_cubature",
    "nb_order",
    "point_in_polygon",
    "polygon_area",
]
