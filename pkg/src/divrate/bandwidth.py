"""Goldenshluger-Lepski bandwidth selection over a finite bandwidth grid."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kernels import GAUSSIAN, KernelSpec, KernelSums, sample_weights
from .numgrid import GridFunction, l2_norm
from .sampling import SizeSample


@dataclass(frozen=True)
class BandwidthGrid:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("bandwidth grid is empty")
        if np.any(np.diff(v) >= 0) or v[0] > 1.0 or v[-1] <= 0:
            raise ValueError("bandwidths must be strictly decreasing in (0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)

    def __contains__(self, h):
        return bool(np.any(self.values == h))

    def is_extremal(self, h: float) -> bool:
        return h == self.values[0] or h == self.values[-1]


def build_bandwidth_grid(n: int, kind: str = "density") -> BandwidthGrid:
    """Bandwidths ``1/D`` with ``D`` in 1..9, 10..90, 100..900, ... up to ``D_max``.

    ``D_max`` is ``n`` for the density and ``floor(sqrt(n))`` for the
    derivative; ``D_max`` itself always ends the list.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if kind == "density":
        d_max = n
    elif kind == "derivative":
        d_max = math.isqrt(n)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    denoms = set()
    decade = 1
    while decade <= d_max:
        denoms.update(a * decade for a in range(1, 10) if a * decade <= d_max)
        decade *= 10
    denoms.add(d_max)
    return BandwidthGrid(np.array([1.0 / d for d in sorted(denoms)]))


@dataclass(frozen=True)
class GLConfig:
    """Constants of the selection rule.

    ``epsilon``/``epsilon_tilde`` set ``chi = (1 + eps)(1 + ||K||_1)``;
    ``g_sup`` is the sup of ``g`` on the estimation domain (computed from ``g``
    when left ``None``); ``c`` regularises the denominator of ``rho``.
    """

    epsilon: float = 0.1
    epsilon_tilde: float = 0.1
    g_sup: float | None = None
    c: float = 0.0

    def __post_init__(self):
        if not (self.epsilon > 0 and self.epsilon_tilde > 0):
            raise ValueError("epsilon and epsilon_tilde must be positive")
        if self.g_sup is not None and not self.g_sup > 0:
            raise ValueError("g_sup must be positive")
        if self.c < 0:
            raise ValueError("c must be nonnegative")

    def chi(self, kernel: KernelSpec = GAUSSIAN) -> float:
        return (1.0 + self.epsilon) * (1.0 + kernel.norm_1)

    def chi_tilde(self, kernel: KernelSpec = GAUSSIAN) -> float:
        return (1.0 + self.epsilon_tilde) * (1.0 + kernel.norm_1)


@dataclass
class GLSelection:
    bandwidths: np.ndarray
    A: np.ndarray
    penalty: np.ndarray
    selected: float
    estimate: GridFunction
    extra: dict = field(default_factory=dict)

    @property
    def criterion(self) -> np.ndarray:
        return self.A + self.penalty

    @property
    def extremal(self) -> bool:
        """True when the choice sits at either end of the grid."""
        return self.selected in (self.bandwidths[0], self.bandwidths[-1])

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["h", "A", "penalty", "criterion", "selected"])
            for h, a, p, c in zip(self.bandwidths, self.A, self.penalty, self.criterion):
                w.writerow([repr(float(h)), repr(float(a)), repr(float(p)), repr(float(c)),
                            int(h == self.selected)])


def _gl_select(H: BandwidthGrid, order: int, sums: KernelSums, n: int,
               penalty_of, grid: GridFunction, kernel: KernelSpec) -> GLSelection:
    hs = H.values
    single = {h: grid.with_values(sums.evaluate(h, order) / n) for h in hs}
    pen = np.array([penalty_of(h) for h in hs])
    A = np.zeros(hs.size)
    for i, h in enumerate(hs):
        best = 0.0
        for j, hp in enumerate(hs):
            pair = grid.with_values(sums.evaluate(kernel.pair_bandwidth(h, hp), order) / n)
            best = max(best, l2_norm(pair - single[hp]) - pen[j])
        A[i] = best
    # hs is decreasing, so argmin's first hit is the largest minimiser
    k = int(np.argmin(A + pen))
    return GLSelection(bandwidths=hs.copy(), A=A, penalty=pen, selected=float(hs[k]),
                       estimate=single[hs[k]])


def gl_criterion_density(sample: SizeSample, H: BandwidthGrid, cfg: GLConfig,
                         kernel: KernelSpec = GAUSSIAN, grid: GridFunction | None = None,
                         sums: KernelSums | None = None) -> GLSelection:
    """Select the density bandwidth.

    ``A(h) = max_{h'} (||N_{h,h'} - N_{h'}||_2 - chi ||K||_2 / sqrt(n h'))_+`` and
    the choice minimises ``A(h) + chi ||K||_2 / sqrt(n h)``, ties going to the
    larger bandwidth. Norms are taken on the nodes of ``grid``.
    """
    if len(H) == 0:
        raise ValueError("empty bandwidth grid")
    if grid is None:
        raise ValueError("an evaluation grid is required")
    n = sample.n
    sums = sums or KernelSums(sample.values, 1.0, grid)
    chi = cfg.chi(kernel)

    def penalty(h):
        return chi * kernel.norm_2 / math.sqrt(n * h)

    return _gl_select(H, 0, sums, n, penalty, grid, kernel)


def operative_g_sup(g, grid: GridFunction) -> float:
    if isinstance(g, GridFunction):
        return float(np.max(g.values))
    return float(np.max(g(grid.x)))


def gl_criterion_derivative(sample: SizeSample, g, H: BandwidthGrid, cfg: GLConfig,
                            kernel: KernelSpec = GAUSSIAN, grid: GridFunction | None = None,
                            sums: KernelSums | None = None) -> GLSelection:
    """Select the bandwidth of the ``(g N)'`` estimator.

    Same rule as :func:`gl_criterion_density` with the variance proxy
    ``chi~ ||g||_inf ||K'||_2 / sqrt(n h^3)``.
    """
    if len(H) == 0:
        raise ValueError("empty bandwidth grid")
    if grid is None:
        raise ValueError("an evaluation grid is required")
    n = sample.n
    sums = sums or KernelSums(sample.values, sample_weights(sample, g), grid)
    g_sup = cfg.g_sup if cfg.g_sup is not None else operative_g_sup(g, grid)
    chi = cfg.chi_tilde(kernel)

    def penalty(h):
        return chi * g_sup * kernel.dnorm_2 / math.sqrt(n * h ** 3)

    sel = _gl_select(H, 1, sums, n, penalty, grid, kernel)
    sel.extra["g_sup"] = g_sup
    return sel
