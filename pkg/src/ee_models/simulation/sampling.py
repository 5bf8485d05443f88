"""
Location samplers: radial kernel offsets and uniform points in polygons.
"""
import math

import numpy as np
import shapely
from scipy.optimize import brentq

from ..geometry import PolygonSet, point_in_polygon
from ..models.kernels import SpatialKernel

TRIANGULATE_BELOW = 0.01
MAX_REJECTIONS = 10_000


def _radius_quantile(kernel: SpatialKernel, theta: np.ndarray, target: float,
                     bound: float) -> float:
    """Smallest r with F(r) = target, searching (0, bound]."""
    hi = bound
    if math.isinf(hi):
        hi = 1.0
        while float(kernel.F(np.array([hi]), theta)[0]) < target:
            hi *= 2
    return brentq(lambda r: float(kernel.F(np.array([r]), theta)[0]) - target, 0.0, hi,
                  xtol=1e-12, rtol=1e-12)


def sample_kernel_location(kernel: SpatialKernel, theta: np.ndarray, radius_bound: float,
                           rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Planar offsets with radius density proportional to r f(r) on (0, bound] and uniform angle.

    Radii come from numeric inversion of the radial antiderivative F.

    Raises:
        ValueError: If the kernel is not integrable up to the bound
    """
    if not radius_bound > 0:
        raise ValueError(f"radius bound must be positive, got {radius_bound}")
    total = kernel.total(theta, radius_bound)
    if not math.isfinite(total) or total <= 0:
        raise ValueError(f"invalid bound: the {kernel.kind} kernel is not integrable up to "
                         f"radius {radius_bound}")
    u = rng.uniform(size=size)
    radii = np.array([_radius_quantile(kernel, theta, float(p) * total, radius_bound)
                      for p in u])
    angles = rng.uniform(0.0, 2 * np.pi, size=size)
    return np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])


def _triangle_points(poly: PolygonSet, n: int, rng: np.random.Generator) -> np.ndarray:
    tris = []
    for part in poly.polygons:
        for tri in shapely.get_parts(shapely.constrained_delaunay_triangles(part)):
            tris.append(np.asarray(tri.exterior.coords)[:3])
    tris = np.asarray(tris)
    A, B, C = tris[:, 0], tris[:, 1], tris[:, 2]
    areas = 0.5 * np.abs((B[:, 0] - A[:, 0]) * (C[:, 1] - A[:, 1])
                         - (C[:, 0] - A[:, 0]) * (B[:, 1] - A[:, 1]))
    which = rng.choice(len(tris), size=n, p=areas / areas.sum())
    u, v = rng.uniform(size=n), rng.uniform(size=n)
    flip = u + v > 1
    u[flip], v[flip] = 1 - u[flip], 1 - v[flip]
    return A[which] + u[:, None] * (B[which] - A[which]) + v[:, None] * (C[which] - A[which])


def uniform_in_polygon(poly: PolygonSet, n: int, rng: np.random.Generator) -> np.ndarray:
    """n uniform points in the polygon set.

    Bounding-box rejection; thin shapes (area below 1% of the box) are
    triangulated instead.
    """
    if n == 0:
        return np.zeros((0, 2))
    if poly.is_empty or poly.area <= 0:
        raise ValueError("invalid polygon: cannot sample from an empty region")
    xmin, ymin, xmax, ymax = poly.bbox
    box = (xmax - xmin) * (ymax - ymin)
    if poly.area / box < TRIANGULATE_BELOW:
        return _triangle_points(poly, n, rng)
    out = np.zeros((0, 2))
    for _ in range(MAX_REJECTIONS):
        need = n - len(out)
        batch = max(int(1.2 * need * box / poly.area), 8)
        pts = np.column_stack([rng.uniform(xmin, xmax, batch), rng.uniform(ymin, ymax, batch)])
        inside = np.asarray(point_in_polygon(poly, pts), dtype=bool)
        out = np.vstack([out, pts[inside][:need]])
        if len(out) >= n:
            return out
    raise RuntimeError("uniform sampling in polygon did not finish")
