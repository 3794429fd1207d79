"""Gaussian kernel estimators of a density and of ``(g N)'`` on a uniform grid.

All estimators are sums ``(1/n) sum_i w_i K_s^{(q)}(x_j - X_i)`` with ``q = 0``
(density) or ``q = 1`` (derivative), ``K_s(u) = K(u/s)/s`` and ``K`` the
standard normal density. The convolution ``K_h * K_h'`` of two Gaussian kernels
is the Gaussian kernel of bandwidth ``sqrt(h^2 + h'^2)``, so the pair
estimators reuse the same sums.

:class:`KernelSums` evaluates these sums for many bandwidths on one sample.
Each point is assigned to the nearest grid node ``c_b`` and its offset
``delta = X - c_b`` (``|delta| <= dx/2``) is expanded in a Taylor series,

    K_s^{(q)}(t - delta) = sum_p delta^p / p! * (-1)^q He_{p+q}(t/s) phi(t/s) / s^{p+q+1},

which turns the sum into a handful of discrete convolutions of per-node
moments ``sum_{i in b} w_i delta_i^p`` against sampled Hermite functions,
done by FFT. The series is used while ``dx/(2s) <= 0.5``; narrower kernels
are summed directly over the nodes within 12 bandwidths of each point.
:func:`naive_kernel_sum` is the plain double loop both paths are checked
against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .numgrid import GridFunction, interp_eval
from .sampling import SizeSample

SQRT_2PI = math.sqrt(2.0 * math.pi)
SERIES_MAX_RATIO = 0.5
DIRECT_CUTOFF = 12.0      # bandwidths; exp(-72) is far below double precision
SERIES_CUTOFF = 40.0


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family with the norms entering the GL penalties."""

    family: str = "gaussian"

    def __post_init__(self):
        if self.family != "gaussian":
            raise ValueError(f"unsupported kernel family {self.family!r}")

    @property
    def norm_1(self) -> float:
        return 1.0

    @property
    def norm_2(self) -> float:
        return (2.0 * math.sqrt(math.pi)) ** -0.5

    @property
    def dnorm_1(self) -> float:
        return math.sqrt(2.0 / math.pi)

    @property
    def dnorm_2(self) -> float:
        return (4.0 * math.sqrt(math.pi)) ** -0.5

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.exp(-0.5 * u * u) / SQRT_2PI

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        return -u * np.exp(-0.5 * u * u) / SQRT_2PI

    @staticmethod
    def pair_bandwidth(h: float, h_prime: float) -> float:
        """Bandwidth of ``K_h * K_h'``."""
        return math.sqrt(h * h + h_prime * h_prime)


GAUSSIAN = KernelSpec()


def grid_template(x_min: float, x_max: float, m: int) -> GridFunction:
    return GridFunction(x_min, x_max, np.zeros(m))


def _hermite_functions(u: np.ndarray, count: int) -> np.ndarray:
    """Rows ``He_k(u) phi(u)`` for ``k < count`` (probabilists' Hermite)."""
    out = np.empty((count, u.size))
    phi = np.exp(-0.5 * u * u) / SQRT_2PI
    out[0] = phi
    if count > 1:
        out[1] = u * phi
    for k in range(2, count):
        out[k] = u * out[k - 1] - (k - 1) * out[k - 2]
    return out


def _series_terms(ratio: float) -> int:
    # smallest P with ratio^P / sqrt(P!) below 1e-18
    p = 1
    while p < 60 and p * math.log(ratio) - 0.5 * math.lgamma(p + 1) > math.log(1e-18):
        p += 1
    return p


def _kernel_q(u: np.ndarray, s: float, order: int) -> np.ndarray:
    z = u / s
    phi = np.exp(-0.5 * z * z) / SQRT_2PI
    if order == 0:
        return phi / s
    if order == 1:
        return -z * phi / (s * s)
    raise ValueError("order must be 0 or 1")


def naive_kernel_sum(points, weights, s: float, grid: GridFunction, order: int = 0) -> np.ndarray:
    """``sum_i w_i K_s^{(order)}(x_j - X_i)`` by the plain double loop."""
    points = np.asarray(points, dtype=float)
    weights = np.broadcast_to(np.asarray(weights, dtype=float), points.shape)
    x = grid.x
    out = np.zeros(x.size)
    for start in range(0, points.size, 512):
        p = points[start:start + 512]
        w = weights[start:start + 512]
        out += _kernel_q(x[:, None] - p[None, :], s, order) @ w
    return out


class KernelSums:
    """Weighted Gaussian kernel sums of one point set on one grid, for any bandwidth."""

    def __init__(self, points, weights, grid: GridFunction):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.broadcast_to(np.asarray(weights, dtype=float), self.points.shape).copy()
        self.x_min, self.dx, self.m = grid.x_min, grid.dx, grid.m
        self.grid = grid
        b = np.rint((self.points - self.x_min) / self.dx).astype(np.int64)
        self._bins = b
        self._delta = self.points - (self.x_min + b * self.dx)
        self._b_lo = int(b.min()) if b.size else 0
        self._b_hi = int(b.max()) if b.size else 0
        self._moment_fft = {}
        self._moment_rows = {}
        self._cache = {}

    def _moments_fft(self, terms: int):
        nb = self._b_hi - self._b_lo + 1
        # k = j - b ranges over [-b_hi, m - 1 - b_lo]
        nk = self.m + nb - 1
        size = sfft.next_fast_len(nb + nk - 1, real=True)
        key = (terms, size)
        if key not in self._moment_fft:
            self._moment_fft[key] = sfft.rfft(self._moments(terms), n=size, axis=1)
        return self._moment_fft[key], nb, nk, size

    def _moments(self, terms: int) -> np.ndarray:
        if terms not in self._moment_rows:
            nb = self._b_hi - self._b_lo + 1
            idx = self._bins - self._b_lo
            mom = np.empty((terms, nb))
            dp = self.weights.copy()
            for p in range(terms):
                mom[p] = np.bincount(idx, weights=dp, minlength=nb)
                dp = dp * self._delta
            self._moment_rows[terms] = mom
        return self._moment_rows[terms]

    def _series(self, s: float, order: int) -> np.ndarray:
        terms = _series_terms(self.dx / (2.0 * s))
        coef = np.array([(-1.0) ** order / (math.factorial(p) * s ** (p + order + 1))
                         for p in range(terms)])
        mom_hat, nb, nk, size = self._moments_fft(terms)
        k = np.arange(-self._b_hi, self.m - self._b_lo)
        u = k * self.dx / s
        herm = _hermite_functions(u, terms + order)[order:]
        herm[:, np.abs(u) > SERIES_CUTOFF] = 0.0
        ker_hat = sfft.rfft(herm * coef[:, None], n=size, axis=1)
        full = sfft.irfft((mom_hat * ker_hat).sum(axis=0), n=size)
        # out[j] = sum_b mom[b] * G[j - b]; G index 0 is k = -b_hi
        offset = self._b_hi - self._b_lo
        return full[offset:offset + self.m]

    def _direct(self, s: float, order: int) -> np.ndarray:
        width = int(math.ceil(DIRECT_CUTOFF * s / self.dx)) + 1
        offs = np.arange(-width, width + 1)
        out = np.zeros(self.m)
        for start in range(0, self.points.size, 8192):
            b = self._bins[start:start + 8192]
            nodes = b[:, None] + offs[None, :]
            keep = (nodes >= 0) & (nodes < self.m)
            u = (self.x_min + nodes * self.dx) - self.points[start:start + 8192, None]
            vals = _kernel_q(u, s, order) * self.weights[start:start + 8192, None]
            out += np.bincount(nodes[keep], weights=vals[keep], minlength=self.m)
        return out

    def evaluate(self, s: float, order: int = 0) -> np.ndarray:
        """Nodal values of ``sum_i w_i K_s^{(order)}(x_j - X_i)`` (not divided by n)."""
        if not s > 0:
            raise ValueError(f"bandwidth must be positive, got {s}")
        key = (float(s), order)
        if key not in self._cache:
            if self.dx / (2.0 * s) <= SERIES_MAX_RATIO:
                vals = self._series(s, order)
            else:
                vals = self._direct(s, order)
            vals.setflags(write=False)
            self._cache[key] = vals
        return self._cache[key]


def _check_bandwidth(*hs):
    for h in hs:
        if not h > 0:
            raise ValueError(f"bandwidth must be positive, got {h}")


def sample_weights(sample: SizeSample, g) -> np.ndarray:
    if isinstance(g, GridFunction):
        return interp_eval(g, sample.values)
    return np.asarray(g(sample.values), dtype=float)


def estimate_density(sample: SizeSample, h: float, grid: GridFunction,
                     sums: KernelSums | None = None) -> GridFunction:
    """Kernel density estimate ``(1/n) sum_i K_h(x - X_i)`` on the nodes of ``grid``."""
    _check_bandwidth(h)
    sums = sums or KernelSums(sample.values, 1.0, grid)
    return grid.with_values(sums.evaluate(h, 0) / sample.n)


def estimate_density_pair(sample: SizeSample, h: float, h_prime: float, grid: GridFunction,
                          sums: KernelSums | None = None) -> GridFunction:
    """``(1/n) sum_i (K_h * K_h')(x - X_i)``."""
    _check_bandwidth(h, h_prime)
    return estimate_density(sample, GAUSSIAN.pair_bandwidth(h, h_prime), grid, sums)


def estimate_derivative(sample: SizeSample, g, h: float, grid: GridFunction,
                        sums: KernelSums | None = None) -> GridFunction:
    """Estimate of ``(g N)'``: ``(1/(n h^2)) sum_i g(X_i) K'((x - X_i)/h)``.

    ``g`` is a tabulated :class:`GridFunction` (interpolated at the sample
    points) or a vectorised callable.
    """
    _check_bandwidth(h)
    sums = sums or KernelSums(sample.values, sample_weights(sample, g), grid)
    return grid.with_values(sums.evaluate(h, 1) / sample.n)


def estimate_derivative_pair(sample: SizeSample, g, h: float, h_prime: float, grid: GridFunction,
                             sums: KernelSums | None = None) -> GridFunction:
    _check_bandwidth(h, h_prime)
    return estimate_derivative(sample, g, GAUSSIAN.pair_bandwidth(h, h_prime), grid, sums)


def smooth_density(N: GridFunction, h: float) -> GridFunction:
    """``K_h * N`` by quadrature on the nodes of ``N`` (for bias studies)."""
    return N.with_values(naive_kernel_sum(N.x, N.dx * _trapezoid_weights(N.m) * N.values, h, N))


def _trapezoid_weights(m: int) -> np.ndarray:
    w = np.ones(m)
    w[0] = w[-1] = 0.5
    return w
