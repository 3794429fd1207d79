"""Functions tabulated on a uniform grid.

Every curve in the package (densities, rates, estimators) is a
:class:`GridFunction`. Quadrature is the trapezoid rule, which is exact for the
piecewise-linear interpolant used by :func:`interp_eval`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or not self.a < self.b:
            raise ValueError(f"invalid interval [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real function sampled at ``m`` equispaced nodes of ``[x_min, x_max]``."""

    x_min: float
    x_max: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("need at least two nodal values")
        if not self.x_max > self.x_min or self.x_min < 0:
            raise ValueError(f"invalid grid [{self.x_min}, {self.x_max}]")
        if not np.all(np.isfinite(vals)):
            raise ValueError("nodal values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, func, x_min: float, x_max: float, m: int) -> "GridFunction":
        x = np.linspace(x_min, x_max, m)
        return cls(x_min, x_max, np.broadcast_to(np.asarray(func(x), dtype=float), x.shape))

    @classmethod
    def zeros_like(cls, other: "GridFunction") -> "GridFunction":
        return cls(other.x_min, other.x_max, np.zeros(other.m))

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.m - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.m)

    def same_grid(self, other: "GridFunction") -> bool:
        return (self.m == other.m and self.x_min == other.x_min
                and self.x_max == other.x_max)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.x_min, self.x_max, values)

    def __call__(self, x):
        return interp_eval(self, x)

    def _combine(self, other, op):
        if isinstance(other, GridFunction):
            _check_same_grid(self, other)
            other = other.values
        return self.with_values(op(self.values, other))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def to_csv(self, path) -> None:
        write_grid_csv(self, path)


def _check_same_grid(f: GridFunction, g: GridFunction) -> None:
    if not f.same_grid(g):
        raise GridMismatchError(
            f"grids differ: [{f.x_min}, {f.x_max}]/{f.m} vs [{g.x_min}, {g.x_max}]/{g.m}")


def integrate(f: GridFunction) -> float:
    """Trapezoid-rule integral of ``f`` over its whole grid."""
    v = f.values
    return float(f.dx * (v.sum() - 0.5 * (v[0] + v[-1])))


def _window_integral(x: np.ndarray, y: np.ndarray, a: float, b: float) -> float:
    # trapezoid over [a, b], splitting the partial end cells by linear interpolation
    inside = (x > a) & (x < b)
    xs = np.concatenate(([a], x[inside], [b]))
    ys = np.concatenate(([np.interp(a, x, y)], y[inside], [np.interp(b, x, y)]))
    return float(np.trapezoid(ys, xs))


def l2_norm(f: GridFunction, window: Interval | None = None) -> float:
    if window is None:
        return float(np.sqrt(integrate(f.with_values(f.values ** 2))))
    if window.a < f.x_min - 1e-12 or window.b > f.x_max + 1e-12:
        raise ValueError(f"window [{window.a}, {window.b}] exceeds the grid")
    return float(np.sqrt(_window_integral(f.x, f.values ** 2, window.a, window.b)))


def l2_distance(f: GridFunction, g: GridFunction, window: Interval | None = None) -> float:
    """L2 distance on ``window`` (default: the whole grid).

    The squared difference is integrated by the trapezoid rule on the shared
    nodes; window ends falling between nodes are handled by interpolating the
    squared difference.
    """
    _check_same_grid(f, g)
    return l2_norm(f - g, window)


def interp_eval(f: GridFunction, x):
    """Piecewise-linear interpolation of ``f``; zero outside ``[x_min, x_max]``."""
    return np.interp(x, f.x, f.values, left=0.0, right=0.0)


def derivative(f: GridFunction) -> GridFunction:
    """Central differences inside, one-sided second order at the ends."""
    return f.with_values(np.gradient(f.values, f.dx, edge_order=2))


def cumulative_integral(f: GridFunction) -> np.ndarray:
    """Running trapezoid integral from ``x_min`` to every node."""
    v = f.values
    out = np.empty_like(v)
    out[0] = 0.0
    np.cumsum(0.5 * f.dx * (v[1:] + v[:-1]), out=out[1:])
    return out


def antiderivative_at(f: GridFunction, x) -> np.ndarray:
    """Exact integral of the piecewise-linear interpolant from ``x_min`` to ``x``."""
    x = np.clip(np.asarray(x, dtype=float), f.x_min, f.x_max)
    cum = cumulative_integral(f)
    v = f.values
    j = np.minimum(((x - f.x_min) / f.dx).astype(int), f.m - 2)
    t = x - (f.x_min + j * f.dx)
    slope = (v[j + 1] - v[j]) / f.dx
    return cum[j] + v[j] * t + 0.5 * slope * t * t


def resample(f: GridFunction, x_min: float, x_max: float, m: int) -> GridFunction:
    return GridFunction.from_callable(lambda x: interp_eval(f, x), x_min, x_max, m)


def write_grid_csv(f: GridFunction, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for xi, vi in zip(f.x, f.values):
            w.writerow([repr(float(xi)), repr(float(vi))])


def read_grid_csv(path) -> GridFunction:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two rows")
    x = np.array([float(r["x"]) for r in rows])
    v = np.array([float(r["value"]) for r in rows])
    if np.any(np.diff(x) <= 0):
        raise ValueError(f"{path}: nodes must be strictly ascending")
    h = np.diff(x)
    if not np.allclose(h, h[0], rtol=1e-8, atol=1e-12):
        raise ValueError(f"{path}: nodes are not equispaced")
    return GridFunction(x[0], x[-1], v)
