import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divrate.dilation import (CellAverages, StepFunction, apply_L, cell_averages, invert_Lk,
                              invert_Lk_loop, inverse_L_series, step_l2_distance, w1_norm)
from divrate.numgrid import GridFunction, integrate, l2_norm


def on(f, a=0.0, b=4.0, m=801):
    return GridFunction.from_callable(f, a, b, m)


def bump(x, c=1.0, w=0.7):
    z = (x - c) / w
    out = np.zeros_like(x)
    inside = np.abs(z) < 1
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


def in_grid(f):
    return f.x <= f.x_max / 2


class TestApplyL:
    def test_third(self):
        f = apply_L(on(lambda x: np.full_like(x, 1 / 3)))
        np.testing.assert_allclose(f.values[in_grid(f)], 1.0, atol=1e-15)

    def test_linear(self):
        f = apply_L(on(lambda x: x))
        np.testing.assert_allclose(f.values[in_grid(f)], 7 * f.x[in_grid(f)], atol=1e-13)

    def test_zero(self):
        assert np.all(apply_L(on(lambda x: 0 * x)).values == 0)


class TestSeries:
    def test_constant(self):
        np.testing.assert_allclose(inverse_L_series(on(np.ones_like)).values, 1 / 3, rtol=1e-15)

    def test_linear_roundtrip(self):
        phi = on(lambda x: x)
        psi = inverse_L_series(phi)
        np.testing.assert_allclose(psi.values, phi.x / 7, atol=1e-13)
        back = apply_L(psi)
        m = in_grid(back)
        np.testing.assert_allclose(back.values[m], phi.values[m], atol=1e-9)

    def test_zero(self):
        assert np.all(inverse_L_series(on(lambda x: 0 * x)).values == 0)

    def test_terms_validation(self):
        with pytest.raises(ValueError):
            inverse_L_series(on(np.ones_like), 0)


class TestCellAverages:
    def test_constant(self):
        c = cell_averages(on(np.ones_like), 4.0, 16)
        np.testing.assert_allclose(c.phi_bar, 1.0)

    def test_affine(self):
        c = cell_averages(on(lambda x: x, 0, 1, 11), 1.0, 4)
        np.testing.assert_allclose(c.phi_bar, [1 / 8, 3 / 8, 5 / 8, 7 / 8], atol=1e-15)

    def test_single_cell(self):
        f = on(np.sin)
        assert cell_averages(f, 4.0, 1).phi_bar[0] == pytest.approx(integrate(f) / 4.0, abs=1e-14)

    def test_beyond_grid(self):
        with pytest.raises(ValueError):
            cell_averages(on(np.ones_like), 5.0, 4)


class TestInvert:
    @pytest.mark.parametrize("k", [1, 2, 3, 17, 1000])
    def test_constant(self, k):
        H = invert_Lk(CellAverages(4.0, k, np.ones(k)))
        np.testing.assert_allclose(H.heights, 1 / 3, rtol=1e-15)

    def test_seed_h1(self):
        H = invert_Lk(CellAverages(4.0, 2, np.ones(2)))
        assert H.heights[1] == pytest.approx(4 / 21 + 3 / 21, abs=1e-16)

    def test_zero(self):
        assert np.all(invert_Lk(CellAverages(4.0, 64, np.zeros(64))).heights == 0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 700), st.integers(0, 2 ** 31))
    def test_vectorised_equals_loop(self, k, seed):
        phi = np.random.default_rng(seed).normal(size=k)
        a = invert_Lk(CellAverages(4.0, k, phi)).heights
        b = invert_Lk_loop(CellAverages(4.0, k, phi)).heights
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 300), st.integers(0, 2 ** 31))
    def test_linear(self, k, seed):
        r = np.random.default_rng(seed)
        a, b = r.normal(size=(2, k))
        c = 2.5
        A = invert_Lk(CellAverages(4.0, k, a)).heights
        B = invert_Lk(CellAverages(4.0, k, b)).heights
        AB = invert_Lk(CellAverages(4.0, k, a + c * b)).heights
        np.testing.assert_allclose(AB, A + c * B, atol=1e-12)

    def test_converges_to_bump(self):
        psi = on(bump, m=4001)
        phi = apply_L(psi)
        errs = []
        for k in (64, 256, 1024):
            H = invert_Lk(cell_averages(phi, 4.0, k))
            err = step_l2_distance(H, psi)
            assert err <= (1 / math.sqrt(6)) * 4.0 * w1_norm(phi) / math.sqrt(k)
            errs.append(err)
        assert errs[0] > errs[1] > errs[2]


class TestStepFunction:
    def test_lookup(self):
        s = StepFunction(4.0, 4, np.array([1.0, 2.0, 3.0, 4.0]))
        np.testing.assert_array_equal(s(np.array([0.0, 0.99, 1.0, 3.5, 4.0, 4.01, -0.1])),
                                      [1, 1, 2, 4, 4, 0, 0])

    def test_norm(self):
        s = StepFunction(2.0, 2, np.array([3.0, 4.0]))
        assert s.l2_norm() == pytest.approx(5.0)
        assert step_l2_distance(s, lambda x: 0 * x) == pytest.approx(5.0)

    def test_csv(self, tmp_path):
        s = StepFunction(4.0, 8, np.arange(8.0))
        s.to_csv(tmp_path / "h.csv")
        back = StepFunction.from_csv(tmp_path / "h.csv")
        assert back.T == 4.0 and back.k == 8
        np.testing.assert_array_equal(back.heights, s.heights)

    def test_validation(self):
        with pytest.raises(ValueError):
            StepFunction(4.0, 3, np.ones(2))
        with pytest.raises(ValueError):
            StepFunction(0.0, 1, np.ones(1))


def test_series_oracle_agreement_decreases():
    phi = on(lambda x: bump(x, 1.0, 0.8) * (1 + 0.5 * np.sin(3 * x)), m=8001)
    psi = inverse_L_series(phi)
    dists = []
    for k in (64, 256, 1024, 4096):
        H = invert_Lk(cell_averages(phi, 4.0, k))
        d = H.heights - psi(H.midpoints)
        dists.append(math.sqrt(H.width * np.sum(d * d)))
    assert all(a > b for a, b in zip(dists, dists[1:]))
