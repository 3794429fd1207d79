"""Growth and division rates, by name or from a two-column CSV."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .numgrid import read_grid_csv


def _one(x):
    return np.ones_like(np.asarray(x, dtype=float))


def _linear(x):
    return np.asarray(x, dtype=float).copy()


def _square(x):
    return np.asarray(x, dtype=float) ** 2


def _b2(x):
    # 1 up to 1.5, linear ramp to 5 at 1.7, then 5
    return np.interp(np.asarray(x, dtype=float), [1.5, 1.7], [1.0, 5.0])


def _b3(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-8.0 * (x - 2.0) ** 2) + 1.0


NAMED_RATES = {
    "one": _one,
    "linear": _linear,
    "square": _square,
    "b2": _b2,
    "b3": _b3,
}


class TabulatedRate:
    """Rate read from a CSV table; held constant beyond the last node."""

    def __init__(self, grid):
        self.grid = grid

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.grid.x, self.grid.values)

    def __repr__(self):
        return f"TabulatedRate([{self.grid.x_min}, {self.grid.x_max}], m={self.grid.m})"


def resolve_rate(spec):
    """Turn a name, a CSV path or a callable into a vectorised rate function."""
    if callable(spec):
        return spec
    if spec in NAMED_RATES:
        return NAMED_RATES[spec]
    path = Path(spec)
    if path.exists():
        return TabulatedRate(read_grid_csv(path))
    raise ValueError(f"unknown rate {spec!r}; expected one of {sorted(NAMED_RATES)} or a CSV file")
