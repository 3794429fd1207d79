"""Acceptance suite: one check per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are collected in the
terminal summary (and printed when running this file directly).
"""

import math
import os
from functools import lru_cache

import numpy as np
import pytest

from divrate.bandwidth import (GLConfig, build_bandwidth_grid, gl_criterion_density,
                               gl_criterion_derivative)
from divrate.dilation import (apply_L, cell_averages, inverse_L_series, invert_Lk,
                              step_l2_distance, w1_norm)
from divrate.eigensolve import ModelSpec, moment_identities, solve_eigenpair
from divrate.harness import ExperimentConfig, emit_report, run_experiment
from divrate.kernels import (estimate_density, estimate_derivative, grid_template,
                             naive_kernel_sum)
from divrate.numgrid import GridFunction
from divrate.sampling import SizeSample, ks_distance, rejection_sample

RESULTS = {}


def report(number, title, passed, detail):
    line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    RESULTS[number] = line
    print(line)
    assert passed, line


def in_band(v, lo, hi):
    return lo <= v <= hi


UNIT_RATES = ExperimentConfig(g="one", B="one", n_values=[1000], replications=50)


@lru_cache(maxsize=None)
def unit_rate_rows(threads):
    old = os.environ.get("DIVRATE_THREADS")
    os.environ["DIVRATE_THREADS"] = str(threads)
    try:
        rep = run_experiment(UNIT_RATES)
    finally:
        if old is None:
            os.environ.pop("DIVRATE_THREADS")
        else:
            os.environ["DIVRATE_THREADS"] = old
    return rep


@pytest.mark.slow
def test_criterion_01_unit_rate_band():
    agg = unit_rate_rows(1).aggregates()[0]
    bands = {"err_N": (0.04, 0.18), "err_D": (0.25, 0.85), "err_H": (0.20, 0.65),
             "h_hat": (0.05, 0.3), "h_tilde": (0.2, 0.7)}
    means = {k: agg[f"{k}_mean"] for k in bands}
    ok = all(in_band(means[k], *bands[k]) for k in bands) and agg["count"] == 50
    detail = ", ".join(f"{k}={means[k]:.3f} in [{lo}, {hi}]" for k, (lo, hi) in bands.items())
    report(1, "unit-rate error band (g=B=1, n=1000, 50 reps)", ok, detail)


@pytest.mark.slow
def test_criterion_02_error_decay():
    cfg = ExperimentConfig(g="linear", B="square", n_values=[1000, 50000], replications=10)
    aggs = run_experiment(cfg).aggregates()
    e_small, e_large = aggs[0]["err_H_mean"], aggs[1]["err_H_mean"]
    scaled = [a["err_H_mean"] / a["n_pow"] for a in aggs]
    spread = max(scaled) / min(scaled)
    ok = e_large <= 0.65 * e_small and spread <= 3.0
    report(2, "error decay (g=x, B=x^2)", ok,
           f"err_H(1e3)={e_small:.3f}, err_H(5e4)={e_large:.3f}, ratio={e_large / e_small:.3f} <= 0.65; "
           f"err_H/n^-0.2 spread={spread:.2f} <= 3")


def _pl_norm(phi: GridFunction) -> float:
    # exact L2 norm of the piecewise-linear interpolant
    a, b = phi.values[:-1], phi.values[1:]
    return math.sqrt(float(np.sum(a * a + a * b + b * b)) / 3.0 * phi.dx)


def test_criterion_03_inversion_norm_bound():
    r = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        m = int(r.integers(2, 200))
        phi = GridFunction(0.0, 4.0, r.normal(size=m) * r.uniform(0.1, 10.0))
        for k in (16, 1024):
            H = invert_Lk(cell_averages(phi, 4.0, k))
            worst = max(worst, H.l2_norm() / _pl_norm(phi))
    bound = 1 / math.sqrt(3) + 1e-9
    report(3, "inversion norm bound", worst <= bound,
           f"max ||L_k^-1 phi|| / ||phi|| = {worst:.4f} <= {bound:.4f} over 100 phi, k in {{16, 1024}}")


def _bump(x, c=1.0, w=0.7):
    z = (x - c) / w
    out = np.zeros_like(x)
    inside = np.abs(z) < 1
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


def test_criterion_04_inversion_convergence():
    T = 4.0
    psi = GridFunction.from_callable(_bump, 0.0, T, 16001)
    phi = apply_L(psi)
    w1 = w1_norm(phi, T)
    ks = (256, 1024, 4096)
    errs = [step_l2_distance(invert_Lk(cell_averages(phi, T, k)), psi) for k in ks]
    bounds = [T * w1 / math.sqrt(6 * k) for k in ks]
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    ok = all(e <= b for e, b in zip(errs, bounds)) and all(q >= 1.7 for q in ratios)
    report(4, "inversion convergence", ok,
           "errors " + ", ".join(f"{e:.2e}<={b:.2e}" for e, b in zip(errs, bounds))
           + f"; ratios {ratios[0]:.2f}, {ratios[1]:.2f} >= 1.7")


def _random_smooth(r, x):
    cut = np.zeros_like(x)
    inside = (x > 0.1) & (x < 1.9)
    cut[inside] = np.exp(-1.0 / ((x[inside] - 0.1) * (1.9 - x[inside])))
    f = np.ones_like(x)
    for a, c, w in zip(r.normal(size=3), r.uniform(0.5, 1.5, 3), r.uniform(0.1, 0.4, 3)):
        f += a * np.exp(-((x - c) / w) ** 2)
    return cut * f


def test_criterion_05_series_oracle():
    T = 4.0
    r = np.random.default_rng(5)
    worst_rt = 0.0
    ratios = []
    for _ in range(20):
        phi = GridFunction.from_callable(lambda x: _random_smooth(r, x), 0.0, T, 8001)
        psi = inverse_L_series(phi, 60)
        back = apply_L(psi)
        m = back.x <= T / 2
        worst_rt = max(worst_rt, float(np.max(np.abs(back.values[m] - phi.values[m]))))
        dists = []
        for k in (256, 1024, 4096):
            H = invert_Lk(cell_averages(phi, T, k))
            d = H.heights - psi(H.midpoints)
            dists.append(math.sqrt(H.width * float(np.sum(d * d))))
        ratios += [dists[0] / dists[1], dists[1] / dists[2]]
    ok_rt = worst_rt <= 1e-9
    ok_rate = all(1.7 <= q <= 2.3 for q in ratios)
    report(5, "series-oracle roundtrip", ok_rt and ok_rate,
           f"roundtrip max {worst_rt:.1e} <= 1e-9 ({'ok' if ok_rt else 'no'}); midpoint distance "
           f"ratio per 4x k in [{min(ratios):.2f}, {max(ratios):.2f}], required [1.7, 2.3]")


def test_criterion_06_eigen_identities():
    cases = [("one", "one", 1.0, 2001), ("linear", "square", 1.0, 2001),
             ("linear", "square", 2.0, 2001), ("one", "square", 1.0, 2001),
             ("one", "b3", 1.0, 2001), ("one", "b2", 1.0, 8001)]
    worst = 0.0
    lam_err = 0.0
    for g, B, kappa, m in cases:
        pair = solve_eigenpair(ModelSpec(g, B, kappa), m)
        ids = moment_identities(pair, ModelSpec(g, B, kappa, pair.N.x_max))
        worst = max(worst, ids["mass"], ids["moment"])
        if g == "linear":
            lam_err = max(lam_err, abs(pair.lam - kappa) / kappa)
    ok = worst <= 1e-6 and lam_err <= 1e-6
    report(6, "eigen identities", ok,
           f"max identity defect {worst:.1e} <= 1e-6 over {len(cases)} models; "
           f"|lambda-kappa|/kappa for g=x {lam_err:.1e} <= 1e-6")


def test_criterion_07_estimator_oracle():
    # bandwidths come from each estimator's own selection grid
    r = np.random.default_rng(7)
    grid = grid_template(0.0, 4.0, 1001)
    worst = 0.0
    for _ in range(100):
        n = int(r.integers(1, 1001))
        s = SizeSample(r.uniform(0.0, 4.0, n))
        h = float(r.choice(build_bandwidth_grid(n, "density").values))
        ht = float(r.choice(build_bandwidth_grid(n, "derivative").values))
        c = r.uniform(0.5, 2.0)
        w = lambda x: c * (1.0 + x)
        fast0 = estimate_density(s, h, grid).values
        slow0 = naive_kernel_sum(s.values, 1.0, h, grid, 0) / n
        fast1 = estimate_derivative(s, w, ht, grid).values
        slow1 = naive_kernel_sum(s.values, w(s.values), ht, grid, 1) / n
        worst = max(worst, np.max(np.abs(fast0 - slow0)), np.max(np.abs(fast1 - slow1)))
    report(7, "estimator oracle equivalence", worst <= 1e-10,
           f"max sup-norm gap {worst:.1e} <= 1e-10 over 100 cases (density and derivative)")


def test_criterion_08_sampler_gate(unit_pair):
    n = 10 ** 5
    gate = 1.95 / math.sqrt(n)
    d = [ks_distance(rejection_sample(unit_pair.N, n, seed), unit_pair.N) for seed in range(100)]
    passed = sum(x <= gate for x in d)
    report(8, "sampler gate", passed >= 99,
           f"{passed}/100 runs with KS <= {gate:.5f} (max {max(d):.5f}), need >= 99")


def test_criterion_09_gl_properties():
    r = np.random.default_rng(9)
    grid = grid_template(0.0, 4.0, 1001)
    ok = True
    checked = 0
    for _ in range(10):
        n = int(r.integers(50, 2000))
        s = SizeSample(r.gamma(4.0, 0.3, n))
        for sel in (gl_criterion_density(s, build_bandwidth_grid(n), GLConfig(), grid=grid),
                    gl_criterion_derivative(s, lambda x: x, build_bandwidth_grid(n, "derivative"),
                                            GLConfig(), grid=grid)):
            crit = sel.criterion
            ok &= sel.selected in sel.bandwidths
            ok &= crit[list(sel.bandwidths).index(sel.selected)] == crit.min()
            ok &= bool(np.all(sel.A >= 0))
            checked += 1
    # chi multiplied by 1e6
    big = GLConfig(epsilon=1e6 * 1.1 - 1, epsilon_tilde=1e6 * 1.1 - 1)
    n = 500
    s = SizeSample(r.gamma(4.0, 0.3, n))
    sd = gl_criterion_density(s, build_bandwidth_grid(n), big, grid=grid)
    st = gl_criterion_derivative(s, lambda x: x, build_bandwidth_grid(n, "derivative"), big, grid=grid)
    dominance = (sd.selected == sd.bandwidths.max() and st.selected == st.bandwidths.max()
                 and np.all(sd.A == 0) and np.all(st.A == 0))
    report(9, "GL selection properties", bool(ok and dominance),
           f"membership, exhaustive minimum and A >= 0 on {checked} selections; "
           f"penalty dominance {'ok' if dominance else 'violated'}")


def _rows_bytes(rep):
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        emit_report(rep, d)
        return (Path(d) / "rows.csv").read_bytes()


@pytest.mark.slow
def test_criterion_10_determinism():
    a = _rows_bytes(unit_rate_rows(1))
    b = _rows_bytes(unit_rate_rows(8))
    report(10, "determinism", a == b,
           f"rows.csv with DIVRATE_THREADS=1 and 8: {len(a)} bytes each, "
           f"{'identical' if a == b else 'different'}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
