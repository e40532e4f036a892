"""Gamma-factor constants and reduced quadratures against independent oracles."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahscat.errors import OutOfRegionError, PreconditionError
from ahscat.specfun import (SpectralPoint, a_coeffs, c_scatter,
                            check_expansion_hypothesis, gamma_complex, c_green,
                            m_norm, m_norm_quadrature, solvability_determinant,
                            t_integral, t_integral_mc, t_region_ok)


class TestSpectralPoint:
    def test_rejects_center(self):
        with pytest.raises(PreconditionError):
            SpectralPoint(zeta=1.0, n=2)

    def test_nu(self):
        sp = SpectralPoint(zeta=2.3, n=1)
        assert sp.nu == pytest.approx(1.8)

    def test_expansion_hypothesis_rejects_integer_2zeta(self):
        with pytest.raises(PreconditionError):
            check_expansion_hypothesis(SpectralPoint(zeta=1.5, n=1))
        check_expansion_hypothesis(SpectralPoint(zeta=1.3, n=1))

    def test_half_integer_spectral_points_constructible(self):
        # needed on the lines 2 zeta = k + n where the solvability gate lives
        sp = SpectralPoint(zeta=1.5, n=2)
        assert sp.zeta == 1.5


class TestGamma:
    @given(st.complex_numbers(min_magnitude=0.1, max_magnitude=20,
                              allow_nan=False, allow_infinity=False))
    @settings(max_examples=200, deadline=None)
    def test_functional_equation(self, z):
        if abs(z.real - round(z.real)) < 1e-3 and z.real <= 0 and abs(z.imag) < 1e-3:
            return
        lhs = gamma_complex(z + 1)
        rhs = z * gamma_complex(z)
        assert abs(lhs - rhs) <= 1e-9 * max(abs(lhs), abs(rhs), 1e-280)

    def test_against_mpmath(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            z = complex(rng.uniform(-8, 8), rng.uniform(-8, 8))
            if abs(z - round(z.real)) < 1e-2 and z.real <= 0.5:
                continue
            ref = complex(mpmath.gamma(z))
            assert gamma_complex(z) == pytest.approx(ref, rel=1e-11)


class TestClosedFormConstants:
    def test_scatter_constant_reference_value(self):
        # 2^{-1} Gamma(-1/2) / Gamma(1/2) = -1 at zeta = 1, n = 1
        assert c_scatter(SpectralPoint(zeta=1.0, n=1)) == pytest.approx(-1.0)

    def test_scatter_constant_general(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(1, 4))
            sp = SpectralPoint(zeta=n / 2 + rng.uniform(0.2, 3.0)
                               + 1j * rng.uniform(-1, 1), n=n)
            ref = complex(mpmath.mpf(2) ** (n - 2 * sp.zeta)
                          * mpmath.gamma(n / 2 - sp.zeta)
                          / mpmath.gamma(sp.zeta - n / 2))
            assert c_scatter(sp) == pytest.approx(ref, rel=1e-10)

    def test_green_constant(self):
        sp = SpectralPoint(zeta=2.3, n=2)
        z = mpmath.mpf("2.3")
        ref = complex((mpmath.mpf(1) / 2 * mpmath.pi ** (-1)
                       * mpmath.gamma(z) / mpmath.gamma(z - 0)) ** 2)
        assert c_green(sp) == pytest.approx(ref, rel=1e-10)


class TestNormalizationIntegral:
    def test_closed_form_vs_quadrature(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(1, 4))
            sp = SpectralPoint(zeta=n / 2 + rng.uniform(0.3, 2.5), n=n)
            assert m_norm_quadrature(sp) == pytest.approx(m_norm(sp), rel=1e-8)

    def test_closed_form_value(self):
        sp = SpectralPoint(zeta=2.3, n=1)
        assert m_norm(sp) == pytest.approx(1.0 / (2 * 2.3 - 1))


class TestTIntegrals:
    def test_region_gate(self):
        sp = SpectralPoint(zeta=1.2, n=1)  # 2 Re zeta < k + 2
        assert not t_region_ok(1, 1, sp)
        with pytest.raises(OutOfRegionError):
            t_integral(1, 1, sp)

    def test_reduced_vs_qmc_spot(self):
        # a point comfortably inside the convergence region, where the raw
        # integrand has finite variance and the QMC reference is trustworthy
        sp = SpectralPoint(zeta=2.3, n=1)
        for l in (1, 2):
            ref = t_integral_mc(l, 1, sp, n_samples=1 << 20, seed=7)
            assert t_integral(l, 1, sp) == pytest.approx(ref, rel=1e-3)

    def test_positive_on_gate_line(self):
        # 2 zeta = k + n: both quadratures positive there
        for n, k in [(2, 1), (3, 2)]:
            sp = SpectralPoint(zeta=(k + n) / 2, n=n)
            assert t_integral(1, k, sp).real > 0
            assert t_integral(2, k, sp).real > 0


class TestPerturbationCoefficients:
    def test_determinant_assembled_from_parts(self):
        for n, k in [(1, 1), (2, 1), (2, 2), (3, 1)]:
            sp = SpectralPoint(zeta=n / 2 + 1.3, n=n)
            t1 = t_integral(1, k, sp)
            t2 = t_integral(2, k, sp)
            z = sp.zeta
            expected = t1 * (k + 2 - 2 * z) * (k - 2 * z + n) \
                - 0.25 * n * k * (n - k) * t2
            assert solvability_determinant(k, sp) == pytest.approx(expected,
                                                                   rel=1e-12)

    def test_coeffs_finite_and_nonzero(self):
        sp = SpectralPoint(zeta=2.3, n=1)
        ac = a_coeffs(1, sp)
        assert math.isfinite(abs(ac.A1)) and abs(ac.A1) > 0
        assert math.isfinite(abs(ac.A2)) and abs(ac.A2) > 0

    def test_ratio_matches_exact_bessel_moments(self):
        # independent closed form from K-Bessel moment integrals:
        # A1 / A2 = (nu^2 - k^2/4) * k / (k + 1) at n = 1
        for zeta, k in [(2.3, 1), (1.8, 1), (2.3, 2)]:
            sp = SpectralPoint(zeta=zeta, n=1)
            ac = a_coeffs(k, sp)
            nu = sp.nu
            expected = (nu ** 2 - k ** 2 / 4) * k / (k + 1)
            assert ac.A1 / ac.A2 == pytest.approx(expected, rel=1e-8)
