"""Tests for the finite-n Kac densities and expected counts."""

import math

import mpmath
import numpy as np
import pytest

from errors import QuadratureError
from kac_analytic import (KacParams, adaptive_quad, damped_psi, expected_count_global, global_moments, kac_density,
                          kac_density_mean, psi_factor, psi_factor_quadrature, sinh_kernel, wilkins_constant)

WILKINS = 0.6257358072


class TestKacParams:
    @pytest.mark.parametrize('kwargs', [{'n': 0}, {'n': 2.5}, {'n': 3, 'sigma': 0.0}, {'n': 3, 'mu': math.inf}])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            KacParams(**kwargs)


class TestMoments:
    def test_values_at_unit_point(self):
        m = global_moments(KacParams(5), 1.0)
        assert (m.A, m.B, m.C) == (5.0, 10.0, 30.0)
        assert m.discriminant == 50.0

    def test_values_at_origin(self):
        m = global_moments(KacParams(2), 0.0)
        assert (m.A, m.B, m.C) == pytest.approx((1.0, 0.0, 1.0))

    def test_closed_forms_match_direct_sums(self):
        t, n = 0.7, 20
        j = np.arange(n)
        m = global_moments(KacParams(n, mu=0.5), t)
        assert m.A == pytest.approx(np.sum(t ** (2 * j)), rel=1e-12)
        assert m.B == pytest.approx(np.sum(j * t ** (2 * j - 1)), rel=1e-12)
        assert m.C == pytest.approx(np.sum(j * j * t ** (2 * j - 2)), rel=1e-12)
        assert m.G == pytest.approx(0.5 * np.sum(t ** j), rel=1e-12)

    def test_zero_mean_has_no_mean_terms(self):
        m = global_moments(KacParams(7), 0.4)
        assert (m.D, m.G, m.Sigma1, m.Sigma2) == (0.0, 0.0, 0.0, 0.0)

    def test_mean_terms_at_origin(self):
        m = global_moments(KacParams(5, mu=1.0), 0.0)
        assert m.G == pytest.approx(1.0)
        assert m.D == pytest.approx(1.0)
        assert m.Sigma1 == pytest.approx(1.0)
        assert m.Sigma2 == pytest.approx(1.0)


class TestKacDensity:
    @pytest.mark.parametrize('n', [5, 50, 500])
    @pytest.mark.parametrize('t', [1.0, -1.0])
    def test_value_at_unit_points(self, n, t):
        expected = math.sqrt((n * n - 1) / 12.0) / math.pi
        assert kac_density(KacParams(n), t) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize('t', [-3.0, -0.5, 0.0, 0.3, 2.5])
    def test_linear_polynomial_is_cauchy(self, t):
        assert kac_density(KacParams(2), t) == pytest.approx(1.0 / (math.pi * (1.0 + t * t)), rel=1e-13)

    def test_inside_unit_interval_for_large_n(self):
        assert kac_density(KacParams(2000), 0.5) == pytest.approx(1.0 / (math.pi * 0.75), abs=1e-3)

    def test_constant_polynomial(self):
        assert kac_density(KacParams(1), 0.3) == 0.0

    @pytest.mark.parametrize('t', [0.1, 0.5, 0.99, 1.0, 1.7])
    def test_even_in_t(self, t):
        params = KacParams(40)
        assert kac_density(params, -t) == pytest.approx(kac_density(params, t), rel=1e-13)

    @pytest.mark.parametrize('n', [10, 100])
    @pytest.mark.parametrize('t', [0.2, 0.5, 0.9])
    def test_inversion(self, n, t):
        params = KacParams(n)
        assert kac_density(params, 1.0 / t) == pytest.approx(kac_density(params, t) * t * t, rel=1e-10)

    def test_far_tail_does_not_overflow(self):
        params = KacParams(1000)
        value = kac_density(params, 50.0)
        assert math.isfinite(value)
        assert value == pytest.approx(kac_density(params, 0.02) / 2500.0, rel=1e-12)

    @pytest.mark.parametrize('t', [1.2, 1.25, 1.3, -1.25])
    def test_just_outside_unit_interval(self, t):
        n = 1000
        with mpmath.workdps(50):
            x = mpmath.mpf(t)
            a = mpmath.fsum(x ** (2 * j) for j in range(n))
            b = mpmath.fsum(j * x ** (2 * j - 1) for j in range(1, n))
            c = mpmath.fsum(j * j * x ** (2 * j - 2) for j in range(1, n))
            expected = float(mpmath.sqrt(a * c - b * b) / (mpmath.pi * a))
        assert kac_density(KacParams(n), t) == pytest.approx(expected, rel=1e-9)
        shifted = kac_density_mean(KacParams(n, mu=0.1), t)
        assert math.isfinite(shifted)
        assert 0.0 < shifted


class TestPsi:
    def test_known_values(self):
        assert psi_factor(0.0) == 1.0
        assert psi_factor(1.0) == pytest.approx(2.4107, abs=1e-4)
        assert psi_factor(-1.0) == pytest.approx(0.278, abs=1e-3)

    @pytest.mark.parametrize('z', np.linspace(-25.0, 25.0, 21).tolist())
    def test_matches_quadrature(self, z):
        oracle = psi_factor_quadrature(z)
        assert abs(psi_factor(z) - oracle) <= 1e-9 * max(1.0, abs(oracle))

    def test_continuous_at_zero(self):
        assert psi_factor(1e-12) == pytest.approx(1.0, abs=1e-9)
        assert psi_factor(-1e-12) == pytest.approx(1.0, abs=1e-9)

    def test_increasing_on_positive_branch(self):
        values = psi_factor(np.linspace(0.0, 25.0, 251))
        assert np.all(np.diff(values) > 0)

    def test_increasing_near_origin_on_negative_branch(self):
        values = psi_factor(np.linspace(-3.0, 0.0, 31))
        assert np.all(np.diff(values) > 0)

    def test_negative_branch_changes_sign(self):
        # The cos kernel makes Psi negative well below zero.
        assert psi_factor(-1.0) > 0
        assert psi_factor(-4.0) < 0

    def test_vectorized(self):
        z = np.array([-2.0, 0.0, 3.0])
        out = psi_factor(z)
        assert out.shape == (3,)
        assert out[1] == 1.0

    def test_damped_form(self):
        z = np.linspace(-10.0, 50.0, 61)
        np.testing.assert_allclose(damped_psi(z), np.exp(-z / 2) * psi_factor(z), rtol=1e-12, atol=1e-15)
        assert math.isfinite(damped_psi(2000.0))


class TestDensityWithMean:
    @pytest.mark.parametrize('n', [2, 5, 50, 100])
    def test_reduces_to_kac_density(self, n):
        params = KacParams(n)
        for t in (-2.0, -0.7, 0.0, 0.4, 1.0, 3.0):
            assert kac_density_mean(params, t) == kac_density(params, t)

    def test_value_at_origin(self):
        expected = math.exp(-1.0) / math.pi * psi_factor(1.0)
        value = kac_density_mean(KacParams(5, mu=1.0), 0.0)
        assert value == pytest.approx(expected, rel=1e-12)
        assert value == pytest.approx(0.2823, abs=1e-4)

    def test_decreasing_in_mu_at_origin(self):
        values = [kac_density_mean(KacParams(50, mu=mu), 0.0) for mu in np.linspace(0.0, 5.0, 51)]
        assert np.all(np.diff(values) < 0)

    @pytest.mark.parametrize('n', [10, 50])
    @pytest.mark.parametrize('mu', [0.1, 0.5, 1.0, 3.0])
    def test_mean_suppresses_positive_half_line(self, n, mu):
        for t in (0.0, 0.3, 0.6, 0.9, 0.99, 1.0, 1.5):
            assert kac_density_mean(KacParams(n, mu=mu), t) <= kac_density(KacParams(n), t) * (1.0 + 1e-12)

    def test_inversion(self):
        params = KacParams(30, mu=0.7)
        assert kac_density_mean(params, 2.0) == pytest.approx(kac_density_mean(params, 0.5) / 4.0, rel=1e-9)


class TestExpectedCounts:
    def test_linear_polynomial_has_one_root(self):
        assert expected_count_global(KacParams(2)) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize('a,b', [(0.0, 1.0), (1.0, math.inf), (-math.inf, -1.0), (-1.0, 0.0)])
    def test_linear_polynomial_quarters(self, a, b):
        assert expected_count_global(KacParams(2), a, b) == pytest.approx(0.25, abs=1e-8)

    def test_rejects_empty_interval(self):
        with pytest.raises(ValueError):
            expected_count_global(KacParams(5), 1.0, 1.0)

    def test_symmetric_halves(self):
        params = KacParams(40)
        left = expected_count_global(params, -math.inf, 0.0)
        right = expected_count_global(params, 0.0, math.inf)
        assert left == pytest.approx(right, rel=1e-7)

    def test_wilkins_constant(self):
        assert wilkins_constant() == pytest.approx(WILKINS, abs=1e-7)

    def test_wilkins_constant_honors_subdivision_limit(self):
        with pytest.raises(QuadratureError):
            wilkins_constant(limit=1)

    def test_total_count_approaches_log_law(self):
        def offset(n):
            total = expected_count_global(KacParams(n), epsabs=1e-12, epsrel=1e-10)
            return total - 2.0 / math.pi * math.log(n) - WILKINS

        assert abs(offset(100)) < 1e-3
        assert abs(offset(1000)) < 1e-4
        assert abs(offset(10_000)) < 1e-4
        assert abs(offset(10)) > abs(offset(1000))

    def test_count_with_mean_is_smaller(self):
        plain = expected_count_global(KacParams(50))
        shifted = expected_count_global(KacParams(50, mu=1.0))
        assert 0.0 < shifted < plain

    def test_fixed_mean_halves_logarithmic_growth(self):
        def growth(mu):
            return (expected_count_global(KacParams(10_000, mu=mu), epsabs=1e-12, epsrel=1e-10)
                    - expected_count_global(KacParams(1000, mu=mu), epsabs=1e-12, epsrel=1e-10))

        assert growth(0.0) == pytest.approx(2.0 / math.pi * math.log(10.0), abs=1e-3)
        assert growth(1.0) == pytest.approx(1.0 / math.pi * math.log(10.0), abs=0.02)


class TestSinhKernel:
    def test_value_at_zero(self):
        assert sinh_kernel(0.0) == pytest.approx(math.sqrt(1.0 / 3.0), rel=1e-15)

    def test_continuous_across_series_switch(self):
        assert sinh_kernel(0.0099999) == pytest.approx(sinh_kernel(0.0100001), abs=1e-9)

    def test_even_and_tail(self):
        assert sinh_kernel(-2.0) == sinh_kernel(2.0)
        assert sinh_kernel(40.0) == pytest.approx(1.0 / 40.0, rel=1e-12)


def test_quadrature_failure_raises():
    with pytest.raises(QuadratureError):
        adaptive_quad(lambda x: 1.0 / math.sqrt(abs(x - 0.3)), 0.0, 1.0, epsabs=1e-14, epsrel=1e-14, limit=2)
