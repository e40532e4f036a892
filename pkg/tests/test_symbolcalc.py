"""Symbol predictions: homogeneity, structure, and bookkeeping."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahscat.errors import PreconditionError
from ahscat.specfun import SpectralPoint, a_coeffs, c_scatter
from ahscat.symbolcalc import (blackhole_symbol_diff, order_bookkeeping,
                               predicted_mode_difference, principal_symbol_S,
                               principal_symbol_diff, symbol_diff_value)


SP = SpectralPoint(zeta=2.3, n=2)
H0 = np.array([[1.2, 0.3], [0.3, 0.8]])
L = np.array([[0.4, -0.1], [-0.1, 0.2]])


class TestLeadingSymbol:
    def test_isotropic_power(self):
        xi = np.array([3.0, 4.0])
        norm = np.sqrt(xi @ np.linalg.solve(H0, xi))
        expected = c_scatter(SP) * norm ** (2 * 2.3 - 2)
        assert principal_symbol_S(SP, H0, xi) == pytest.approx(expected, rel=1e-12)

    def test_zero_covector_rejected(self):
        with pytest.raises(PreconditionError):
            principal_symbol_S(SP, H0, np.zeros(2))


class TestDifferenceSymbol:
    @given(st.floats(min_value=0.1, max_value=50.0))
    @settings(max_examples=40, deadline=None)
    def test_homogeneity(self, t):
        xi = np.array([2.0, -1.0])
        k = 1
        base = principal_symbol_diff(k, SP, H0, L, 0.7, xi)
        scaled = principal_symbol_diff(k, SP, H0, L, 0.7, t * xi)
        order = 2 * SP.zeta - SP.n - k
        assert scaled == pytest.approx(base * t ** order, rel=1e-9)

    def test_even_in_xi(self):
        xi = np.array([1.0, 3.0])
        v1 = principal_symbol_diff(1, SP, H0, L, 0.7, xi)
        v2 = principal_symbol_diff(1, SP, H0, L, 0.7, -xi)
        assert v1 == pytest.approx(v2, rel=1e-13)

    def test_structure_against_manual_assembly(self):
        xi = np.array([2.0, 1.0])
        k, W = 1, 0.5
        ac = a_coeffs(k, SP)
        h0inv = np.linalg.inv(H0)
        Hmat = h0inv @ L @ h0inv
        T = np.trace(h0inv @ L)
        norm = np.sqrt(xi @ h0inv @ xi)
        manual = (ac.A1 * (xi @ Hmat @ xi) * norm ** (2 * SP.zeta - 2 - k - 2)
                  + ac.A2 * (W - 0.25 * k * (2 - k) * T)
                  * norm ** (2 * SP.zeta - 2 - k))
        assert principal_symbol_diff(k, SP, H0, L, W, xi) == pytest.approx(
            manual, rel=1e-12)

    def test_trace_term_vanishes_at_k_equals_n(self):
        # k (n - k) = 0: a pure-trace metric perturbation with W = 0 reduces
        # to the anisotropic term alone
        sp = SpectralPoint(zeta=2.8, n=2)
        xi = np.array([0.0, 2.0])
        v = principal_symbol_diff(2, sp, np.eye(2), np.eye(2), 0.0, xi)
        ac = a_coeffs(2, sp)
        assert v == pytest.approx(ac.A1 * 4.0 * 2.0 ** (2 * 2.8 - 2 - 2 - 2),
                                  rel=1e-12)

    def test_symbol_value_wrapper(self):
        sv = symbol_diff_value(1, SP, H0, L, 0.7)
        xi = np.array([1.0, 1.0])
        assert sv(xi) == pytest.approx(
            principal_symbol_diff(1, SP, H0, L, 0.7, xi), rel=1e-13)
        assert sv.order == 2 * SP.zeta - SP.n - 1


class TestModePrediction:
    def test_matches_symbol_at_integer_covector(self):
        mode = (3, -2)
        assert predicted_mode_difference(1, SP, H0, L, 0.7, mode) == \
            pytest.approx(principal_symbol_diff(1, SP, H0, L, 0.7,
                                                np.array(mode, float)), rel=1e-13)

    def test_zero_mode_rejected(self):
        with pytest.raises(PreconditionError):
            predicted_mode_difference(1, SP, H0, L, 0.7, (0, 0))

    def test_order_bookkeeping(self):
        assert order_bookkeeping(1, SP) == pytest.approx(2 * 2.3 - 2 - 1)


class TestBlackHoleSymbol:
    def test_no_trace_term(self):
        # H enters only through xi.H.xi; a trace-only change of H along the
        # xi-orthogonal direction must leave the value unchanged
        xi = np.array([1.0, 0.0])
        lam = -1.3j  # admissible off the physical line: zeta = 1 + 1.3
        v1 = blackhole_symbol_diff(1, lam, np.diag([0.5, 0.0]), 0.2, xi)
        v2 = blackhole_symbol_diff(1, lam, np.diag([0.5, 9.9]), 0.2, xi)
        assert v1 == pytest.approx(v2, rel=1e-12)

    def test_zero_covector_rejected(self):
        with pytest.raises(PreconditionError):
            blackhole_symbol_diff(1, -1.3j, np.eye(2), 0.2, np.zeros(2))
