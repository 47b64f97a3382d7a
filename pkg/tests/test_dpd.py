import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasedd.dpd import (ImbalanceSet, compute_dpd_coefficients, er_to_imbalance,
                         imbalance_to_er_db, offset_correct, predistort)

from _oracles import affine_residual, dpd_cascade


def _signal(rng, n=20000, scale=0.05):
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)


class TestImbalance:
    def test_limits(self):
        assert er_to_imbalance(math.inf) == 1.0
        assert er_to_imbalance(0.0) == 0.0

    def test_seven_db(self):
        assert er_to_imbalance(7.0) == pytest.approx(0.3825, abs=1e-4)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            er_to_imbalance(-1.0)

    @given(st.floats(1.0, 40.0))
    @settings(max_examples=200, deadline=None)
    def test_round_trip(self, er):
        assert imbalance_to_er_db(er_to_imbalance(er)) == pytest.approx(er, rel=1e-12)

    def test_set_validation(self):
        with pytest.raises(ValueError):
            ImbalanceSet(0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            ImbalanceSet(1.0, 1.2, 1.0)

    def test_from_er(self):
        g = ImbalanceSet.from_er(7.0, 25.0)
        assert g.g_I == g.g_Q == er_to_imbalance(7.0)
        assert g.g_P == er_to_imbalance(25.0)


class TestCoefficients:
    def test_ideal(self):
        k = compute_dpd_coefficients(ImbalanceSet())
        assert (k.b_I, k.c_I, k.d_I, k.b_Q, k.c_Q, k.d_Q) == (0, 0, 0, 0, 0, 0)
        assert k.a_I == pytest.approx(1.0) and k.a_Q == pytest.approx(1.0)

    def test_finite(self):
        k = compute_dpd_coefficients(ImbalanceSet.from_er(4.0, 4.0))
        assert all(math.isfinite(v) for v in vars(k).values())

    @given(st.tuples(*[st.floats(0.05, 0.999)] * 3))
    @settings(max_examples=100, deadline=None)
    def test_continuity(self, g):
        h = 1e-7
        k0 = np.array(list(vars(compute_dpd_coefficients(ImbalanceSet(*g))).values()))
        k1 = np.array(list(vars(compute_dpd_coefficients(
            ImbalanceSet(*(x + h for x in g)))).values()))
        assert np.max(np.abs(k1 - k0)) < 1e-4


class TestPredistort:
    def test_zero_argument(self):
        k = compute_dpd_coefficients(ImbalanceSet())
        v_I, v_Q = predistort(np.zeros(5), np.zeros(5), k, 4.0, 4.0, 4.0, 4.0)
        np.testing.assert_allclose(v_I, -4.0 / 2 - 4.0)

    def test_unit_argument(self):
        k = compute_dpd_coefficients(ImbalanceSet())
        res = predistort(np.ones(5), np.zeros(5), k, 4.0, 4.0, 4.0, 4.0)
        np.testing.assert_allclose(res.v_I, -4.0)
        assert res.saturation_fraction == 0.0

    def test_saturation_counted(self):
        k = compute_dpd_coefficients(ImbalanceSet())
        res = predistort(np.array([2.0, 0.0]), np.array([0.0, 0.0]), k, 4.0, 4.0, 4.0, 4.0)
        assert res.saturation_fraction == pytest.approx(0.25)

    def test_shape_mismatch(self):
        k = compute_dpd_coefficients(ImbalanceSet())
        with pytest.raises(ValueError):
            predistort(np.zeros(3), np.zeros(4), k, 4.0, 4.0, 4.0, 4.0)

    def test_ideal_modulator_linearized(self, rng):
        s = _signal(rng)
        out, sat = dpd_cascade(s, ImbalanceSet())
        assert sat == 0.0
        assert affine_residual(s, out) < 1e-8

    @pytest.mark.parametrize("er_i, er_o", [(7, 25), (10, 25), (7, 40), (15, 30)])
    def test_attainable_region(self, rng, er_i, er_o):
        s = _signal(rng)
        out, sat = dpd_cascade(s, ImbalanceSet.from_er(er_i, er_o))
        assert sat == 0.0
        assert affine_residual(s, out) < 1e-4

    @pytest.mark.parametrize("er_i, er_o", [(4, 4), (6, 4), (4, 25), (7, 10)])
    def test_improves_on_no_dpd(self, rng, er_i, er_o):
        from phasedd.optics import ModulatorParams, iq_transfer
        s = _signal(rng)
        g = ImbalanceSet.from_er(er_i, er_o)
        with_dpd, _ = dpd_cascade(s, g)
        m = ModulatorParams(g=g)
        # plain null-biased drive giving the same small-signal swing
        raw = iq_transfer(4.0 * (2 / np.pi) * 2 * s.real, 4.0 * (2 / np.pi) * 2 * s.imag, m)
        assert affine_residual(s, with_dpd) < affine_residual(s, raw)


class TestOffset:
    def test_alpha_zero(self, rng):
        v = rng.standard_normal(10) + 3
        np.testing.assert_array_equal(offset_correct(v, 0.0), v)

    def test_zero_mean(self):
        v = np.array([1.0, -1.0, 2.0, -2.0])
        np.testing.assert_array_equal(offset_correct(v, 0.7), v)

    def test_constant_alpha_one(self):
        np.testing.assert_allclose(offset_correct(np.full(4, 2.5), 1.0), 0.0)

    def test_negative_alpha(self):
        with pytest.raises(ValueError):
            offset_correct(np.ones(3), -0.1)

    @given(st.floats(-5, 5).filter(lambda m: abs(m) > 1e-3), st.floats(0, 1))
    @settings(max_examples=100, deadline=None)
    def test_mean_shift(self, mean, alpha):
        v = np.random.default_rng(1).standard_normal(64)
        v = v - v.mean() + mean
        lit = offset_correct(v, alpha)
        assert lit.mean() == pytest.approx(v.mean() - alpha * abs(v.mean()), abs=1e-9)
        conv = offset_correct(v, alpha, literal=False)
        assert conv.mean() == pytest.approx(v.mean() * (1 - alpha), abs=1e-9)
