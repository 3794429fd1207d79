"""From a size sample to estimates of ``H = B N`` and ``B``.

1. select ``N_hat`` and ``D_hat ~ (g N)'`` by GL bandwidth selection,
2. ``kappa_hat = lambda_hat * sum X_i / (sum g(X_i) + c)``,
3. ``H_hat = L_k^{-1}(kappa_hat D_hat + lambda_hat N_hat)`` on ``[0, T]``,
4. ``B_tilde = clip(H_hat / N_hat, -sqrt(n), sqrt(n))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bandwidth import (BandwidthGrid, GLConfig, build_bandwidth_grid, gl_criterion_density,
                        gl_criterion_derivative)
from .dilation import StepFunction, cell_averages, invert_Lk
from .kernels import GAUSSIAN, KernelSpec, KernelSums, grid_template, sample_weights
from .numgrid import GridFunction, Interval, l2_distance, l2_norm
from .sampling import SizeSample


class DegenerateDenominatorError(ZeroDivisionError):
    pass


@dataclass
class EstimationResult:
    h_hat: float
    h_tilde: float
    rho_hat: float
    kappa_hat: float
    lambda_used: float
    N_hat: GridFunction
    D_hat: GridFunction
    H_hat: StepFunction
    B_tilde: GridFunction | None = None
    diagnostics: dict = field(default_factory=dict)
    selections: tuple = ()

    def summary(self) -> dict:
        out = {
            "n": self.diagnostics.get("n"),
            "h_hat": self.h_hat,
            "h_tilde": self.h_tilde,
            "rho_hat": self.rho_hat,
            "kappa_hat": self.kappa_hat,
            "lambda": self.lambda_used,
        }
        out.update({k: v for k, v in self.diagnostics.items() if k not in out})
        return out


def estimate_rho(sample: SizeSample, g, c: float = 0.0) -> float:
    """``sum X_i / (sum g(X_i) + c)``."""
    if c < 0:
        raise ValueError("c must be nonnegative")
    den = float(np.sum(sample_weights(sample, g))) + c
    if den == 0:
        raise DegenerateDenominatorError("sum of g over the sample plus c is zero")
    return float(np.sum(sample.values)) / den


def estimate_kappa(lambda_hat: float, rho_hat: float) -> float:
    return lambda_hat * rho_hat


def estimate_H(sample: SizeSample, g, lambda_hat: float, cfg: GLConfig | None = None,
               k: int | None = None, T: float = 4.0, grid: GridFunction | None = None,
               kernel: KernelSpec = GAUSSIAN,
               H: BandwidthGrid | None = None, H_tilde: BandwidthGrid | None = None,
               ) -> EstimationResult:
    """Steps 1-3. ``k`` defaults to the sample size; ``grid`` to 1001 nodes on ``[0, T]``."""
    cfg = cfg or GLConfig()
    n = sample.n
    k = n if k is None else int(k)
    grid = grid if grid is not None else grid_template(0.0, T, 1001)
    if T > grid.x_max + 1e-12:
        raise ValueError(f"T={T} exceeds the evaluation grid [0, {grid.x_max}]")
    H = H or build_bandwidth_grid(n, "density")
    H_tilde = H_tilde or build_bandwidth_grid(n, "derivative")

    sel_N = gl_criterion_density(sample, H, cfg, kernel, grid,
                                 KernelSums(sample.values, 1.0, grid))
    sel_D = gl_criterion_derivative(sample, g, H_tilde, cfg, kernel, grid,
                                    KernelSums(sample.values, sample_weights(sample, g), grid))
    rho = estimate_rho(sample, g, cfg.c)
    kappa = estimate_kappa(lambda_hat, rho)
    phi = kappa * sel_D.estimate + lambda_hat * sel_N.estimate
    cells = cell_averages(phi, T, k)
    H_hat = invert_Lk(cells)
    diagnostics = {
        "n": n,
        "k": k,
        "T": T,
        "h_hat_extremal": sel_N.extremal,
        "h_tilde_extremal": sel_D.extremal,
        "g_sup": sel_D.extra["g_sup"],
        "negative_cells": int(np.sum(cells.phi_bar < 0)),
        "min_cell_average": float(cells.phi_bar.min()),
    }
    result = EstimationResult(
        h_hat=sel_N.selected, h_tilde=sel_D.selected, rho_hat=rho, kappa_hat=kappa,
        lambda_used=float(lambda_hat), N_hat=sel_N.estimate, D_hat=sel_D.estimate,
        H_hat=H_hat, diagnostics=diagnostics, selections=(sel_N, sel_D))
    return result


def estimate_B(result: EstimationResult, n: int, window: Interval | None = None) -> GridFunction:
    """``H_hat / N_hat`` at the nodes of ``N_hat``, clipped to ``[-sqrt(n), sqrt(n)]``.

    Where ``N_hat`` vanishes the ratio is taken as ``sign(H_hat) * inf`` (so 0
    when both vanish) before clipping. With ``window`` the result is set to
    zero outside it.
    """
    Nh = result.N_hat
    Hh = result.H_hat.on_grid(Nh).values
    den = Nh.values
    cap = math.sqrt(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        inf = np.where(Hh != 0, np.sign(Hh) * np.inf, 0.0)
        ratio = np.where(den != 0, Hh / np.where(den != 0, den, 1.0), inf)
    B = np.clip(ratio, -cap, cap)
    if window is not None:
        x = Nh.x
        B = np.where((x >= window.a) & (x <= window.b), B, 0.0)
    return Nh.with_values(B)


def run_pipeline(sample: SizeSample, g, lambda_hat: float, cfg: GLConfig | None = None,
                 k: int | None = None, T: float = 4.0, grid: GridFunction | None = None,
                 kernel: KernelSpec = GAUSSIAN) -> EstimationResult:
    """All four steps; ``B_tilde`` is filled in."""
    result = estimate_H(sample, g, lambda_hat, cfg, k, T, grid, kernel)
    result.B_tilde = estimate_B(result, sample.n)
    return result


def relative_error(est, truth: GridFunction, window: Interval | None = None) -> float:
    """``||est - truth||_2 / ||truth||_2`` on ``window``; step functions are
    sampled at the nodes of ``truth``."""
    if isinstance(est, StepFunction):
        est = est.on_grid(truth)
    norm = l2_norm(truth, window)
    if norm == 0:
        raise ValueError("truth vanishes on the window")
    return l2_distance(est, truth, window) / norm
