"""The dilation operator ``L psi(x) = 4 psi(2x) - psi(x)`` and its inverses.

``inverse_L_series`` sums the L2 inverse ``sum_{n>=1} 4^{-n} phi(2^{-n} x)``
and serves as a reference. ``invert_Lk`` is the piecewise-constant inverse on
``k`` cells of ``[0, T]`` built from cell averages of ``phi`` by the recursion

    H_i = (H_{i/2} + phi_{i/2}) / 4,

where a half index ``u_{i/2}`` means ``u_{i/2}`` for even ``i`` and
``(u_{(i-1)/2} + u_{(i+1)/2}) / 2`` for odd ``i``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numgrid import GridFunction, antiderivative_at, interp_eval


@dataclass(frozen=True)
class CellAverages:
    T: float
    k: int
    phi_bar: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.phi_bar, dtype=float)
        if v.shape != (self.k,) or not np.all(np.isfinite(v)):
            raise ValueError(f"need {self.k} finite cell averages")
        object.__setattr__(self, "phi_bar", v)


@dataclass(frozen=True)
class StepFunction:
    """Piecewise constant on ``[iT/k, (i+1)T/k)``, the last cell closed, zero elsewhere."""

    T: float
    k: int
    heights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.heights, dtype=float)
        if self.k < 1 or v.shape != (self.k,) or not np.all(np.isfinite(v)):
            raise ValueError(f"need {self.k} finite heights")
        if not self.T > 0:
            raise ValueError("T must be positive")
        object.__setattr__(self, "heights", v)

    @property
    def width(self) -> float:
        return self.T / self.k

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.k + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.k) + 0.5) * self.width

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.floor(x / self.width).astype(np.int64)
        idx = np.where(x == self.T, self.k - 1, idx)
        inside = (x >= 0) & (idx < self.k) & (idx >= 0)
        return np.where(inside, self.heights[np.clip(idx, 0, self.k - 1)], 0.0)

    def l2_norm(self) -> float:
        """Exact ``||.||_{2,T}``."""
        return math.sqrt(self.width * float(np.sum(self.heights ** 2)))

    def on_grid(self, grid: GridFunction) -> GridFunction:
        """Nodal values: the height of the cell containing each node."""
        return grid.with_values(self(grid.x))

    def to_csv(self, path) -> None:
        e = self.edges
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cell_left", "cell_right", "height"])
            for a, b, h in zip(e[:-1], e[1:], self.heights):
                w.writerow([repr(float(a)), repr(float(b)), repr(float(h))])

    @classmethod
    def from_csv(cls, path) -> "StepFunction":
        with Path(path).open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        heights = np.array([float(r["height"]) for r in rows])
        return cls(float(rows[-1]["cell_right"]), len(rows), heights)


def apply_L(psi: GridFunction) -> GridFunction:
    """``4 psi(2x) - psi(x)`` at the nodes; ``psi`` is zero beyond its grid."""
    x = psi.x
    return psi.with_values(4.0 * interp_eval(psi, 2.0 * x) - psi.values)


def inverse_L_series(phi: GridFunction, terms: int = 60) -> GridFunction:
    """Truncated ``sum_{n=1}^{terms} 4^{-n} phi(2^{-n} x)``.

    The neglected tail is at most ``sup|phi| 4^{-terms} / 3``.
    """
    if terms < 1:
        raise ValueError("terms must be at least 1")
    x = phi.x
    out = np.zeros(phi.m)
    for n in range(terms, 0, -1):
        out += 0.25 ** n * interp_eval(phi, x * 0.5 ** n)
    return phi.with_values(out)


def cell_averages(phi: GridFunction, T: float, k: int) -> CellAverages:
    """Means of the piecewise-linear interpolant of ``phi`` over the ``k`` cells of ``[0, T]``.

    Integrals are exact for the interpolant (antiderivative evaluated at the
    cell edges), which is what any trapezoid rule on sub-points converges to.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if not T > 0 or T > phi.x_max + 1e-12 or phi.x_min > 0:
        raise ValueError(f"[0, {T}] is not covered by the grid [{phi.x_min}, {phi.x_max}]")
    edges = np.linspace(0.0, T, k + 1)
    F = antiderivative_at(phi, edges)
    return CellAverages(T, k, np.diff(F) * (k / T))


def _half(u: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """``u_{i/2}`` for each ``i`` in ``idx``."""
    even = idx % 2 == 0
    lo = idx // 2
    return np.where(even, u[lo], 0.5 * (u[lo] + u[np.minimum(lo + 1, u.size - 1)]))


def invert_Lk(cells: CellAverages) -> StepFunction:
    """Approximate inverse of ``L`` on ``[0, T]`` with ``k`` cells.

    Seeds ``H_0 = phi_0/3`` and ``H_1 = 4 phi_0/21 + phi_1/7`` solve the two
    self-referencing equations; every later ``H_i`` only needs indices at most
    ``(i+1)/2 < i``. Indices in ``[2^l, 2^{l+1})`` are filled together, even
    ones first (they depend on the previous block only), then odd ones (which
    may also use ``H_{2^l}``).
    """
    k, phi = cells.k, cells.phi_bar
    H = np.zeros(k)
    H[0] = phi[0] / 3.0
    if k > 1:
        H[1] = (4.0 * phi[0] / 21.0) + phi[1] / 7.0
    lo = 2
    while lo < k:
        hi = min(2 * lo, k)
        idx = np.arange(lo, hi)
        for parity in (0, 1):
            sel = idx[idx % 2 == parity]
            if sel.size:
                H[sel] = 0.25 * (_half(H, sel) + _half(phi, sel))
        lo = hi
    return StepFunction(cells.T, k, H)


def invert_Lk_loop(cells: CellAverages) -> StepFunction:
    """Same recursion, one index at a time (reference for :func:`invert_Lk`)."""
    k, phi = cells.k, cells.phi_bar
    H = np.zeros(k)

    def half(u, i):
        return u[i // 2] if i % 2 == 0 else 0.5 * (u[(i - 1) // 2] + u[(i + 1) // 2])

    H[0] = phi[0] / 3.0
    for i in range(1, k):
        if i == 1:
            # H_1 = (H_0 + H_1 + phi_0 + phi_1)/8, solved for H_1
            H[1] = (H[0] + phi[0] + phi[1]) / 7.0
        else:
            H[i] = 0.25 * (half(H, i) + half(phi, i))
    return StepFunction(cells.T, k, H)


def step_l2_distance(step: StepFunction, f, points_per_cell: int = 8) -> float:
    """``||step - f||_{2,T}`` by Gauss-Legendre quadrature inside every cell.

    ``f`` is a vectorised callable or a :class:`GridFunction`.
    """
    nodes, weights = np.polynomial.legendre.leggauss(points_per_cell)
    a = step.edges[:-1]
    x = a[:, None] + 0.5 * step.width * (nodes[None, :] + 1.0)
    fx = interp_eval(f, x) if isinstance(f, GridFunction) else np.asarray(f(x), dtype=float)
    diff = step.heights[:, None] - fx
    return math.sqrt(0.5 * step.width * float(np.sum(diff * diff * weights[None, :])))


def w1_norm(f: GridFunction, T: float | None = None) -> float:
    """``(||f||_2^2 + ||f'||_2^2)^{1/2}`` on ``[x_min, T]`` by the trapezoid rule."""
    from .numgrid import Interval, derivative, l2_norm

    window = None if T is None else Interval(f.x_min, T)
    return math.hypot(l2_norm(f, window), l2_norm(derivative(f), window))
