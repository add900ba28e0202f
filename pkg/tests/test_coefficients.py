import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from wickshe.basis import MultiIndex, TruncationSpec, hermite_function
from wickshe.coefficients import (cs_coefficient, cs_level_coefficients, dx_coefficient,
                                  dx_level_coefficients)
from wickshe.kernels import constant_ic, heat_kernel, sine_ic

ZERO = MultiIndex(())


class TestCsCoefficient:
    def test_zero_index_constant(self, coeff_quad):
        assert cs_coefficient(ZERO, 1.0, 0.2, constant_ic(), coeff_quad) == pytest.approx(
            1.0, abs=1e-8)

    def test_order_one_vs_adaptive_quadrature(self, coeff_quad):
        # u_(1)(1, 0) = int_0^1 int p(1-s, -y) e_1(y) dy ds, adaptive oracle
        ref = dblquad(lambda y, s: heat_kernel(1.0 - s, -y) * hermite_function(1, y),
                      0.0, 1.0 - 1e-12, -12.0, 12.0, epsabs=1e-9)[0]
        val = cs_coefficient(MultiIndex((1,)), 1.0, 0.0, constant_ic(), coeff_quad)
        assert val == pytest.approx(ref, abs=1e-4)

    def test_order_cap(self, coeff_quad):
        with pytest.raises(ValueError, match="cap"):
            cs_coefficient(MultiIndex((4,)), 1.0, 0.0, constant_ic(), coeff_quad)

    def test_level_sweep_matches_single(self, coeff_quad):
        spec = TruncationSpec(2, 3)
        lvl = cs_level_coefficients(2, 0.8, 0.1, sine_ic(), spec, coeff_quad)
        a = MultiIndex((1, 1))
        single = cs_coefficient(a, 0.8, 0.1, sine_ic(), coeff_quad)
        assert lvl[a] == pytest.approx(single, abs=1e-12)

    def test_rejects_nonpositive_time(self, coeff_quad):
        with pytest.raises(ValueError):
            cs_coefficient(ZERO, 0.0, 0.0, constant_ic(), coeff_quad)


class TestDxCoefficient:
    def test_zero_index_sine(self, coeff_quad):
        # d/dx of e^{-t/2} sin x at (1, 0)
        val = dx_coefficient(ZERO, 1.0, 0.0, sine_ic(), quad=coeff_quad)
        assert val == pytest.approx(math.exp(-0.5), abs=1e-8)

    def test_zero_index_constant_vanishes(self, coeff_quad):
        assert dx_coefficient(ZERO, 1.0, 0.3, constant_ic(), quad=coeff_quad) == pytest.approx(
            0.0, abs=1e-10)

    def test_epsilon_sequence_parity_zero(self, coeff_quad):
        # at x = 0 the (1,) coefficient vanishes by parity (odd kernel, even
        # mode); the epsilon sequence and its limit all sit at zero
        vals = [dx_coefficient(MultiIndex((1,)), 1.0, 0.0, constant_ic(), epsilon=e,
                               quad=coeff_quad) for e in (0.2, 0.1, 0.05, 0.0)]
        assert all(abs(v) < 1e-10 for v in vals)

    def test_epsilon_sequence_converges(self, coeff_quad):
        # mode 2 is odd, so the coefficient is non-trivial at x = 0
        a = MultiIndex((0, 1))
        limit = dx_coefficient(a, 1.0, 0.0, constant_ic(), epsilon=0.0, quad=coeff_quad)
        seq = [dx_coefficient(a, 1.0, 0.0, constant_ic(), epsilon=e, quad=coeff_quad)
               for e in (0.2, 0.1, 0.05, 0.025, 0.0125)]
        gaps = [abs(s - limit) for s in seq]
        assert all(g1 > g2 for g1, g2 in zip(gaps, gaps[1:]))
        # the regularized values converge ~ linearly in epsilon; a two-point
        # Richardson step on the finest pair recovers the limit
        extrap = 2 * seq[-1] - seq[-2]
        assert extrap == pytest.approx(limit, abs=1e-3)

    def test_convergence_check_passes(self, coeff_quad):
        val = dx_coefficient(MultiIndex((0, 1)), 1.0, 0.0, constant_ic(),
                             quad=coeff_quad, check_convergence=True)
        assert np.isfinite(val)

    def test_dx_consistency_with_finite_difference(self, coeff_quad):
        # central difference of the solution coefficient matches the
        # derivative coefficient
        h = 1e-3
        for a in (MultiIndex((1,)), MultiIndex((0, 1)), MultiIndex((1, 1))):
            up = cs_coefficient(a, 1.0, 0.3 + h, constant_ic(), coeff_quad)
            dn = cs_coefficient(a, 1.0, 0.3 - h, constant_ic(), coeff_quad)
            fd = (up - dn) / (2 * h)
            val = dx_coefficient(a, 1.0, 0.3, constant_ic(), quad=coeff_quad)
            assert val == pytest.approx(fd, abs=1e-3)

    def test_epsilon_range_guard(self, coeff_quad):
        with pytest.raises(ValueError, match="epsilon"):
            dx_coefficient(MultiIndex((1,)), 1.0, 0.0, constant_ic(), epsilon=1.5,
                           quad=coeff_quad)


class TestLevelSweeps:
    def test_dx_level_parity_structure(self, coeff_quad):
        # at x = 0 with constant data, K_alpha is non-zero only when the
        # tensor e_{k_1} x ... x e_{k_n} is odd overall
        spec = TruncationSpec(1, 4)
        lvl = dx_level_coefficients(1, 1.0, 0.0, constant_ic(), spec, coeff_quad)
        assert abs(lvl[MultiIndex((1,))]) < 1e-10
        assert abs(lvl[MultiIndex((0, 1))]) > 1e-3
        assert abs(lvl[MultiIndex((0, 0, 1))]) < 1e-10
        assert abs(lvl[MultiIndex((0, 0, 0, 1))]) > 1e-4
