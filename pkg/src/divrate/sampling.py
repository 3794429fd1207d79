"""Rejection sampling of cell sizes from a tabulated density."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numgrid import GridFunction, antiderivative_at, integrate, interp_eval

# Draws are produced in fixed-size blocks, each from its own Philox substream
# keyed by (seed, block index); output does not depend on which worker runs
# which block.
BLOCK = 4096
ENVELOPE_SLACK = 1.0001


class DegenerateDensityError(ValueError):
    pass


@dataclass(frozen=True)
class SizeSample:
    values: np.ndarray
    seed: int | None = None
    proposals: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("a sample needs at least one value")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"])
            for v in self.values:
                w.writerow([repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "SizeSample":
        with Path(path).open(newline="") as fh:
            vals = [float(r["x"]) for r in csv.DictReader(fh)]
        return cls(np.array(vals))


def envelope_constant(N: GridFunction) -> float:
    """Total mass of the uniform envelope: ``1.0001 * max N * (x_max - x_min)``."""
    return ENVELOPE_SLACK * float(N.values.max()) * (N.x_max - N.x_min)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(block,))
    return np.random.Generator(np.random.Philox(ss))


def _sample_block(N: GridFunction, count: int, rng: np.random.Generator, height: float):
    out = np.empty(count)
    filled = 0
    proposals = 0
    accept_rate = integrate(N) / (height * (N.x_max - N.x_min))
    while filled < count:
        k = max(64, int(1.2 * (count - filled) / accept_rate))
        x = rng.uniform(N.x_min, N.x_max, size=k)
        u = rng.uniform(0.0, height, size=k)
        idx = np.flatnonzero(u < interp_eval(N, x))
        take = min(idx.size, count - filled)
        # proposals after the last needed acceptance are not counted
        proposals += idx[take - 1] + 1 if filled + take == count else k
        out[filled:filled + take] = x[idx[:take]]
        filled += take
    return out, proposals


def rejection_sample(N: GridFunction, n: int, seed: int) -> SizeSample:
    """Draw ``n`` sizes from the piecewise-linear density through the nodes of ``N``.

    Proposals are uniform on ``[x_min, x_max]`` under the constant envelope of
    height ``1.0001 * max N``; a proposal ``x`` is kept when ``u * height <
    N(x)``. Deterministic given ``seed``.
    """
    if n <= 0:
        raise ValueError(f"sample size must be positive, got {n}")
    if np.any(N.values < 0):
        raise ValueError("density has negative nodal values")
    if not N.values.max() > 0:
        raise DegenerateDensityError("density vanishes identically")
    mass = integrate(N)
    if abs(mass - 1.0) > 1e-6:
        raise ValueError(f"density integrates to {mass}, not 1")
    height = ENVELOPE_SLACK * float(N.values.max())
    out = np.empty(n)
    proposals = 0
    for b, start in enumerate(range(0, n, BLOCK)):
        count = min(BLOCK, n - start)
        out[start:start + count], p = _sample_block(N, count, _block_rng(seed, b), height)
        proposals += p
    return SizeSample(out, seed=seed, proposals=proposals)


def density_cdf(N: GridFunction, x) -> np.ndarray:
    """CDF of the normalised piecewise-linear interpolant of ``N``."""
    return antiderivative_at(N, x) / integrate(N)


def density_quantile(N: GridFunction, p) -> np.ndarray:
    """Inverse of :func:`density_cdf`, solved exactly within each grid cell."""
    p = np.asarray(p, dtype=float)
    total = integrate(N)
    nodes_cdf = antiderivative_at(N, N.x) / total
    j = np.clip(np.searchsorted(nodes_cdf, p, side="right") - 1, 0, N.m - 2)
    v = N.values
    a = v[j] / total
    slope = (v[j + 1] - v[j]) / N.dx / total
    rem = p - nodes_cdf[j]
    # solve 0.5 slope t^2 + a t = rem for t in [0, dx]
    disc = np.sqrt(np.maximum(a * a + 2.0 * slope * rem, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(np.abs(slope) > 1e-300, 2.0 * rem / (a + disc), rem / np.where(a > 0, a, 1.0))
    return N.x_min + j * N.dx + np.clip(t, 0.0, N.dx)


def ks_distance(sample: SizeSample, N: GridFunction) -> float:
    """Kolmogorov distance between the empirical CDF and the CDF of ``N``."""
    x = np.sort(sample.values)
    n = x.size
    F = density_cdf(N, x)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))
