"""
Cubature of isotropic kernels over polygonal domains.

For a radial kernel f with F(r) = integral of x f(x) over [0, r], Green's
theorem turns the area integral over a polygon (centered at the kernel
origin) into a sum over boundary edges a -> b:

    cross(a, b) * integral_0^1 F(|a + tau (b - a)|) / |a + tau (b - a)|^2 dtau

which leaves a single adaptive 1D quadrature per edge. Outer rings run
counter-clockwise and holes clockwise, so holes subtract automatically.
When F is not finite along the boundary the integral falls back to
product Gauss-Legendre cubature over a constrained Delaunay triangulation.
"""
import logging
from typing import Callable, Optional, Sequence

import numpy as np
import shapely
from scipy.integrate import quad, quad_vec

from .polygons import PolygonSet

logger = logging.getLogger("ee-models.cubature")

Kernel = Callable[[np.ndarray], np.ndarray]

MAX_GAUSS_NODES = 256


def _edges(domain: PolygonSet) -> tuple[np.ndarray, np.ndarray]:
    starts, ends = [], []
    for ring, _ in domain.rings:
        starts.append(ring[:-1])
        ends.append(ring[1:])
    return np.concatenate(starts), np.concatenate(ends)


def _numeric_antiderivative(f: Kernel, breakpoints: Sequence[float]) -> Kernel:
    """F(r) by adaptive quadrature of x f(x), split at the kernel's breakpoints."""

    def F(r: np.ndarray) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r)
        for k, rk in enumerate(r):
            pts = [b for b in breakpoints if 0 < b < rk] or None
            out[k] = quad(lambda x: x * float(f(np.array([x]))[0]), 0.0, rk,
                          points=pts, limit=200)[0]
        return out

    return F


def _radial_integrand(F: Kernel, f0: float, r: np.ndarray) -> np.ndarray:
    """F(r)/r^2 with its limit f(0)/2 at the origin."""
    out = np.full(r.shape, 0.5 * f0)
    pos = r > 1e-12
    out[pos] = F(r[pos]) / r[pos] ** 2
    return out


def _green(
    F: Kernel,
    f0: float,
    domain: PolygonSet,
    tol: float,
    breakpoints: Sequence[float],
) -> float:
    a, b = _edges(domain)
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    keep = cross != 0
    a, b, cross = a[keep], b[keep], cross[keep]
    if cross.size == 0:
        return 0.0
    d = b - a

    if not breakpoints:
        def integrand(tau: float) -> np.ndarray:
            p = a + tau * d
            return cross * _radial_integrand(F, f0, np.hypot(p[:, 0], p[:, 1]))

        values, err = quad_vec(integrand, 0.0, 1.0, epsrel=tol, norm="max")
        total = float(np.sum(values))
        if not np.isfinite(total):
            raise FloatingPointError("non-finite line integral")
        return total

    # kinks of F where the edge crosses a breakpoint circle
    total = 0.0
    knots = np.asarray(breakpoints, dtype=float)
    for ak, dk, ck in zip(a, d, cross):
        qa, qb, qc = dk @ dk, 2 * ak @ dk, ak @ ak
        points = []
        for rk in knots:
            disc = qb * qb - 4 * qa * (qc - rk * rk)
            if disc > 0:
                sq = np.sqrt(disc)
                points.extend(t for t in ((-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa))
                              if 0 < t < 1)

        def edge_integrand(tau: float, ak: np.ndarray = ak, dk: np.ndarray = dk) -> float:
            p = ak + tau * dk
            return float(_radial_integrand(F, f0, np.array([np.hypot(p[0], p[1])]))[0])

        value = quad(edge_integrand, 0.0, 1.0, points=sorted(points) or None,
                     epsabs=0.0, epsrel=min(tol, 1e-10), limit=200)[0]
        total += ck * value
    if not np.isfinite(total):
        raise FloatingPointError("non-finite line integral")
    return float(total)


def _triangles(domain: PolygonSet) -> np.ndarray:
    """(n, 3, 2) triangle vertices covering the domain."""
    tris = []
    for poly in domain.polygons:
        for tri in shapely.get_parts(shapely.constrained_delaunay_triangles(poly)):
            tris.append(np.asarray(tri.exterior.coords)[:3])
    return np.asarray(tris).reshape(-1, 3, 2)


def _product_gauss_once(f: Kernel, tris: np.ndarray, n: int) -> float:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    u = (nodes + 1) / 2
    w = weights / 2
    uu, vv = np.meshgrid(u, u, indexing="ij")
    ww = np.outer(w, w)
    total = 0.0
    for A, B, C in tris:
        # collapsed square: (u, v) -> A + u (B - A) + u v (C - B)
        pts = (A[None, None, :] + uu[..., None] * (B - A)[None, None, :]
               + (uu * vv)[..., None] * (C - B)[None, None, :])
        area2 = abs((B[0] - A[0]) * (C[1] - A[1]) - (C[0] - A[0]) * (B[1] - A[1]))
        values = np.asarray(f(np.hypot(pts[..., 0], pts[..., 1]).ravel())).reshape(uu.shape)
        total += float(np.sum(ww * values * uu)) * area2
    return total


def _product_gauss(f: Kernel, domain: PolygonSet, tol: float) -> float:
    """Product Gauss-Legendre cubature, doubling the nodes until stable."""
    tris = _triangles(domain)
    n = 8
    previous = _product_gauss_once(f, tris, n)
    while n < MAX_GAUSS_NODES:
        n *= 2
        current = _product_gauss_once(f, tris, n)
        if abs(current - previous) <= tol * max(abs(current), 1e-300):
            return current
        previous = current
    logger.debug(f"product Gauss cubature stopped at {n} nodes without reaching tol {tol}")
    return previous


def kernel_cubature(
    f: Kernel,
    domain: PolygonSet,
    tol: float = 1e-6,
    F: Optional[Kernel] = None,
    breakpoints: Sequence[float] = (),
) -> float:
    """Integrate a radial kernel f(|s|) over a polygon set centered at the origin.

    Args:
        f: Vectorized kernel of the distance
        domain: Integration domain in kernel-centered coordinates
        tol: Relative error target
        F: Optional closed form of the radial antiderivative r -> int_0^r x f(x) dx
        breakpoints: Radii where f jumps (step kernels); the line integrals are
            split where an edge crosses them

    Returns:
        The integral of f(|s|) over the domain

    Raises:
        ValueError: If tol <= 0 or f is not finite on the domain
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if domain.is_empty:
        return 0.0
    f0 = float(np.asarray(f(np.array([0.0])))[0])
    if not np.isfinite(f0):
        # the origin need not be inside the domain; check the rest of the range instead
        f0 = 0.0
    rmax = domain.max_distance()
    sampled = np.asarray(f(np.linspace(0.0, rmax, 17)[1:]))
    if not np.all(np.isfinite(sampled)):
        raise ValueError("kernel is not finite on the integration domain")

    antiderivative = F if F is not None else _numeric_antiderivative(f, breakpoints)
    try:
        return _green(antiderivative, f0, domain, tol, breakpoints)
    except (FloatingPointError, ZeroDivisionError) as e:
        logger.debug(f"line integral failed ({e}); using product Gauss cubature")
    return _product_gauss(f, domain, tol)
