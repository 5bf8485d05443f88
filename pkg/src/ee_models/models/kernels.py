"""
Spatial (siaf) and temporal (tiaf) interaction functions.

Spatial kernels f(r) of the distance come with the radial antiderivative
F(r) = int_0^r x f(x) dx in closed form, which is what polygon cubature
needs, and with derivatives with respect to their log-scale parameters.
Temporal kernels g(t) come with G(t) = int_0^t g(u) du.

Step kernels have height 1 on the first interval and one free
log-height per knot; they vanish beyond ``maxRange``.
"""
import math
from typing import Dict, List, Sequence

import numpy as np

from ..config.models import KernelSpec
from ..geometry import PolygonSet, kernel_cubature

SERIES_THRESHOLD = 1e-3


def _pow_diff(a: np.ndarray, b: np.ndarray, e: float) -> np.ndarray:
    """(a^e - b^e) / e, with the limit log(a/b) at e = 0."""
    L = np.log(a / b)
    if e == 0:
        return L
    return b ** e * np.expm1(e * L) / e


def _pow_diff_de(a: np.ndarray, b: np.ndarray, e: float) -> np.ndarray:
    """d/de of _pow_diff, i.e. int_b^a y^(e-1) log(y) dy."""
    La, Lb = np.log(a), np.log(b)
    scale = max(float(np.max(np.abs(La))), float(np.max(np.abs(Lb))), 1.0)
    if abs(e) * scale < SERIES_THRESHOLD:
        return ((La ** 2 - Lb ** 2) / 2 + e * (La ** 3 - Lb ** 3) / 3
                + e ** 2 * (La ** 4 - Lb ** 4) / 8 + e ** 3 * (La ** 5 - Lb ** 5) / 30)
    return (a ** e * La - b ** e * Lb - _pow_diff(a, b, e)) / e


class SpatialKernel:
    """Isotropic spatial interaction function f(|s|)."""

    kind = "constant"
    param_labels: List[str] = []

    def __init__(self, spec: KernelSpec):
        self.spec = spec

    @property
    def n_params(self) -> int:
        return len(self.param_labels)

    def start(self) -> np.ndarray:
        return np.zeros(0)

    def natural(self, theta: np.ndarray) -> Dict[str, float]:
        return {label: float(math.exp(v)) for label, v in zip(self.param_labels, theta)}

    def breakpoints(self) -> Sequence[float]:
        return ()

    def f(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return np.ones_like(np.asarray(r, dtype=float))

    def F(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return r ** 2 / 2

    def df(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return np.zeros((0, *np.shape(r)))

    def dF(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return np.zeros((0, *np.shape(r)))

    def total(self, theta: np.ndarray, bound: float = math.inf) -> float:
        """F(bound); infinite when the kernel is not integrable up to the bound."""
        if math.isinf(bound):
            return math.inf
        return float(self.F(np.array([bound]), theta)[0])

    def integrate(self, domain: PolygonSet, theta: np.ndarray, tol: float) -> float:
        """int over the centered domain of f(|s|) ds."""
        return domain.area

    def integrate_deriv(self, domain: PolygonSet, theta: np.ndarray, tol: float) -> np.ndarray:
        """Gradient of ``integrate`` in the log-scale parameters."""
        grads = np.empty(self.n_params)
        for k in range(self.n_params):
            grads[k] = kernel_cubature(
                lambda r, k=k: self.df(r, theta)[k], domain, tol,
                F=lambda r, k=k: self.dF(r, theta)[k], breakpoints=self.breakpoints())
        return grads


class GaussianKernel(SpatialKernel):
    """f(r) = exp(-r^2 / (2 sigma^2)); parameter log(sigma)."""

    kind = "gaussian"
    param_labels = ["sigma"]

    def start(self) -> np.ndarray:
        return np.array([math.log(self.spec.sigma or 1.0)])

    def f(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        sigma = math.exp(theta[0])
        return np.exp(-np.asarray(r, dtype=float) ** 2 / (2 * sigma ** 2))

    def F(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        sigma2 = math.exp(2 * theta[0])
        return -sigma2 * np.expm1(-np.asarray(r, dtype=float) ** 2 / (2 * sigma2))

    def df(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        sigma2 = math.exp(2 * theta[0])
        return (self.f(r, theta) * r ** 2 / sigma2)[None]

    def dF(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return (2 * self.F(r, theta) - r ** 2 * self.f(r, theta))[None]

    def total(self, theta: np.ndarray, bound: float = math.inf) -> float:
        if math.isinf(bound):
            return math.exp(2 * theta[0])
        return super().total(theta, bound)

    def integrate(self, domain: PolygonSet, theta: np.ndarray, tol: float) -> float:
        return kernel_cubature(lambda r: self.f(r, theta), domain, tol,
                               F=lambda r: self.F(r, theta))


class PowerLawKernel(SpatialKernel):
    """f(r) = (r + sigma)^(-d); parameters log(sigma), log(d)."""

    kind = "powerlaw"
    param_labels = ["sigma", "d"]

    def start(self) -> np.ndarray:
        return np.array([math.log(self.spec.sigma or 1.0), math.log(self.spec.d or 2.0)])

    def f(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        sigma, d = math.exp(theta[0]), math.exp(theta[1])
        return (np.asarray(r, dtype=float) + sigma) ** (-d)

    @staticmethod
    def _F(r: np.ndarray, sigma: float, d: float) -> np.ndarray:
        a = np.asarray(r, dtype=float) + sigma
        return _pow_diff(a, sigma, 2 - d) - sigma * _pow_diff(a, sigma, 1 - d)

    def F(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return self._F(r, math.exp(theta[0]), math.exp(theta[1]))

    def df(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        sigma, d = math.exp(theta[0]), math.exp(theta[1])
        a = np.asarray(r, dtype=float) + sigma
        fr = a ** (-d)
        return np.stack([-d * sigma * fr / a, -d * np.log(a) * fr])

    def dF(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        sigma, d = math.exp(theta[0]), math.exp(theta[1])
        a = np.asarray(r, dtype=float) + sigma
        # dF/dsigma = -d F_{d+1}
        d_logsigma = -d * sigma * (_pow_diff(a, sigma, 1 - d) - sigma * _pow_diff(a, sigma, -d))
        d_d = -(_pow_diff_de(a, sigma, 2 - d) - sigma * _pow_diff_de(a, sigma, 1 - d))
        return np.stack([d_logsigma, d * d_d])

    def total(self, theta: np.ndarray, bound: float = math.inf) -> float:
        if math.isinf(bound):
            sigma, d = math.exp(theta[0]), math.exp(theta[1])
            if d <= 2:
                return math.inf
            return sigma ** (2 - d) / ((d - 2) * (d - 1))
        return super().total(theta, bound)

    def integrate(self, domain: PolygonSet, theta: np.ndarray, tol: float) -> float:
        return kernel_cubature(lambda r: self.f(r, theta), domain, tol,
                               F=lambda r: self.F(r, theta))


class StepKernel(SpatialKernel):
    """Piecewise constant f with height 1 on [0, k1) and exp(theta_j) on [k_j, k_(j+1))."""

    kind = "step"

    def __init__(self, spec: KernelSpec):
        super().__init__(spec)
        self.knots = np.asarray(spec.knots, dtype=float)
        self.edges = np.concatenate([[0.0], self.knots, [spec.maxRange]])
        self.param_labels = [str(k + 1) for k in range(len(self.knots))]

    def natural(self, theta: np.ndarray) -> Dict[str, float]:
        return {f"height{k + 1}": float(math.exp(v)) for k, v in enumerate(theta)}

    def start(self) -> np.ndarray:
        if self.spec.heights is not None:
            return np.log(np.asarray(self.spec.heights, dtype=float))
        return np.zeros(len(self.knots))

    def heights(self, theta: np.ndarray) -> np.ndarray:
        return np.concatenate([[1.0], np.exp(theta)])

    def breakpoints(self) -> Sequence[float]:
        return [float(k) for k in self.edges[1:] if math.isfinite(k)]

    def _pieces(self, r: np.ndarray) -> np.ndarray:
        """(intervals, *r.shape) of int over each interval of x dx up to r."""
        r = np.asarray(r, dtype=float)
        lo = self.edges[:-1].reshape(-1, *([1] * r.ndim))
        hi = self.edges[1:].reshape(-1, *([1] * r.ndim))
        upper = np.minimum(r[None], hi)
        return np.where(upper > lo, (upper ** 2 - lo ** 2) / 2, 0.0)

    def f(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.edges, r, side="right") - 1
        h = np.concatenate([self.heights(theta), [0.0]])
        idx = np.clip(idx, 0, len(h) - 1)
        return np.where(r < self.edges[-1], h[idx], 0.0)

    def F(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        h = self.heights(theta)
        return np.tensordot(h, self._pieces(r), axes=1)

    def df(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        h = self.heights(theta)
        lo = self.edges[1:-1].reshape(-1, *([1] * r.ndim))
        hi = self.edges[2:].reshape(-1, *([1] * r.ndim))
        inside = (r[None] >= lo) & (r[None] < hi)
        return inside * h[1:].reshape(-1, *([1] * r.ndim))

    def dF(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        h = self.heights(theta)
        return self._pieces(r)[1:] * h[1:].reshape(-1, *([1] * r.ndim))

    def total(self, theta: np.ndarray, bound: float = math.inf) -> float:
        return float(self.F(np.array([min(bound, self.edges[-1])]), theta)[0]) \
            if math.isfinite(min(bound, self.edges[-1])) else math.inf

    def integrate(self, domain: PolygonSet, theta: np.ndarray, tol: float) -> float:
        return kernel_cubature(lambda r: self.f(r, theta), domain, tol,
                               F=lambda r: self.F(r, theta), breakpoints=self.breakpoints())


class TemporalKernel:
    """Temporal interaction function g(t), constant by default."""

    kind = "constant"
    param_labels: List[str] = []

    def __init__(self, spec: KernelSpec):
        self.spec = spec

    @property
    def n_params(self) -> int:
        return len(self.param_labels)

    def start(self) -> np.ndarray:
        return np.zeros(0)

    def natural(self, theta: np.ndarray) -> Dict[str, float]:
        return {label: float(math.exp(v)) for label, v in zip(self.param_labels, theta)}

    def g(self, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return np.ones_like(np.asarray(t, dtype=float))

    def G(self, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return np.asarray(t, dtype=float).copy()

    def dg(self, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return np.zeros((0, *np.shape(t)))

    def dG(self, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return np.zeros((0, *np.shape(t)))

    def sup(self, t_from: float, theta: np.ndarray) -> float:
        """Supremum of g over [t_from, inf)."""
        return 1.0


class ExponentialKernel(TemporalKernel):
    """g(t) = exp(-alpha t); parameter log(alpha)."""

    kind = "exponential"
    param_labels = ["alpha"]

    def start(self) -> np.ndarray:
        return np.array([math.log(self.spec.alpha or 1.0)])

    def g(self, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return np.exp(-math.exp(theta[0]) * np.asarray(t, dtype=float))

    def G(self, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        alpha = math.exp(theta[0])
        return -np.expm1(-alpha * np.asarray(t, dtype=float)) / alpha

    def dg(self, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        alpha = math.exp(theta[0])
        return (-alpha * t * self.g(t, theta))[None]

    def dG(self, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return (t * self.g(t, theta) - self.G(t, theta))[None]

    def sup(self, t_from: float, theta: np.ndarray) -> float:
        return float(math.exp(-math.exp(theta[0]) * max(t_from, 0.0)))


class TemporalStepKernel(TemporalKernel):
    """Piecewise constant g with height 1 on [0, k1)."""

    kind = "step"

    def __init__(self, spec: KernelSpec):
        super().__init__(spec)
        self.knots = np.asarray(spec.knots, dtype=float)
        self.edges = np.concatenate([[0.0], self.knots, [spec.maxRange]])
        self.param_labels = [str(k + 1) for k in range(len(self.knots))]

    def natural(self, theta: np.ndarray) -> Dict[str, float]:
        return {f"height{k + 1}": float(math.exp(v)) for k, v in enumerate(theta)}

    def start(self) -> np.ndarray:
        if self.spec.heights is not None:
            return np.log(np.asarray(self.spec.heights, dtype=float))
        return np.zeros(len(self.knots))

    def heights(self, theta: np.ndarray) -> np.ndarray:
        return np.concatenate([[1.0], np.exp(theta)])

    def _pieces(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        lo = self.edges[:-1].reshape(-1, *([1] * t.ndim))
        hi = self.edges[1:].reshape(-1, *([1] * t.ndim))
        return np.clip(np.minimum(t[None], hi) - lo, 0.0, None)

    def g(self, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        h = np.concatenate([self.heights(theta), [0.0]])
        idx = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(h) - 1)
        return np.where(t < self.edges[-1], h[idx], 0.0)

    def G(self, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return np.tensordot(self.heights(theta), self._pieces(t), axes=1)

    def dg(self, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        h = self.heights(theta)
        lo = self.edges[1:-1].reshape(-1, *([1] * t.ndim))
        hi = self.edges[2:].reshape(-1, *([1] * t.ndim))
        return ((t[None] >= lo) & (t[None] < hi)) * h[1:].reshape(-1, *([1] * t.ndim))

    def dG(self, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        h = self.heights(theta)
        return self._pieces(t)[1:] * h[1:].reshape(-1, *([1] * t.ndim))

    def sup(self, t_from: float, theta: np.ndarray) -> float:
        h = self.heights(theta)
        first = max(int(np.searchsorted(self.edges, max(t_from, 0.0), side="right")) - 1, 0)
        return float(h[first:].max()) if first < len(h) else 0.0


def make_siaf(spec: KernelSpec) -> SpatialKernel:
    kinds = {"constant": SpatialKernel, "gaussian": GaussianKernel,
             "powerlaw": PowerLawKernel, "step": StepKernel}
    if spec.kind not in kinds:
        raise ValueError(f"invalid spatial kernel '{spec.kind}'")
    return kinds[spec.kind](spec)


def make_tiaf(spec: KernelSpec) -> TemporalKernel:
    kinds = {"constant": TemporalKernel, "exponential": ExponentialKernel,
             "step": TemporalStepKernel}
    if spec.kind not in kinds:
        raise ValueError(f"invalid temporal kernel '{spec.kind}'")
    return kinds[spec.kind](spec)
