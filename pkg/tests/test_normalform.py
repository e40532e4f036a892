"""Exact model-form reduction: pullback oracle, probing, invariants."""

import random
from fractions import Fraction

import pytest
import sympy

from ahscat.errors import PreconditionError
from ahscat.normalform import (CoordChangeJet, MetricJet, model_form,
                               normalize_step, pullback)


def _rand_fraction(rng):
    return Fraction(rng.randint(-5, 5), rng.randint(1, 7))


def random_jet(rng, n, N, diag=40):
    a = [0] + [_rand_fraction(rng) for _ in range(N)]
    b = [[0] * n] + [[_rand_fraction(rng) for _ in range(n)] for _ in range(N)]
    c = []
    for m in range(N + 1):
        M = [[_rand_fraction(rng) for _ in range(n)] for _ in range(n)]
        S = [[M[i][j] + M[j][i] for j in range(n)] for i in range(n)]
        if m == 0:
            for i in range(n):
                S[i][i] += diag
        c.append(S)
    return MetricJet.from_slots(n, N, a, b, c)


class TestMetricJet:
    def test_slot_access(self):
        mj = MetricJet.from_slots(1, 2, [0, Fraction(1, 2), 1],
                                  [[0], [Fraction(1, 3)], [0]],
                                  [[[2]], [[1]], [[0]]])
        assert mj.a(1) == Fraction(1, 2)
        assert mj.b(1) == (Fraction(1, 3),)
        assert mj.c(0) == ((2,),)

    def test_rejects_nonzero_leading_slots(self):
        with pytest.raises(PreconditionError):
            MetricJet.from_slots(1, 1, [1, 0], [[0], [0]], [[[1]], [[0]]])

    def test_rejects_indefinite_c0(self):
        with pytest.raises(PreconditionError):
            MetricJet.from_slots(2, 0, [0], [[0, 0]],
                                 [[[1, 3], [3, 1]]])

    def test_json_round_trip(self):
        rng = random.Random(1)
        mj = random_jet(rng, 2, 4)
        assert MetricJet.from_json(mj.to_json()).G == mj.G


class TestPullback:
    def test_identity_change(self):
        rng = random.Random(2)
        mj = random_jet(rng, 2, 4)
        assert pullback(mj, CoordChangeJet(n=2, N=4)).G == mj.G

    def test_boundary_preserving_only(self):
        with pytest.raises(PreconditionError):
            CoordChangeJet(n=1, N=3, gamma={1: Fraction(1)})

    def test_against_sympy_expansion(self):
        # independent symbolic oracle at n = 1: pull (G00 dx^2 + 2 G01 dx dy
        # + G11 dy^2)/x^2 back through x = X + g X^2, y = Y + d X^2 and
        # compare jets through order 3
        rng = random.Random(3)
        mj = random_jet(rng, 1, 3)
        g, d = Fraction(1, 3), Fraction(-2, 5)
        cc = CoordChangeJet(n=1, N=3, gamma={2: g}, delta={2: (d,)})
        engine = pullback(mj, cc)

        X = sympy.symbols("X", positive=True)
        gs, ds = sympy.Rational(g), sympy.Rational(d)
        x = X + gs * X ** 2
        dx_dX = sympy.diff(x, X)
        dy_dX = sympy.diff(ds * X ** 2, X)

        def entry(i, j):
            return sum(sympy.Rational(mj.G[m][i][j]) * x ** m for m in range(4))

        G00, G01, G11 = entry(0, 0), entry(0, 1), entry(1, 1)
        w = (X / x) ** 2
        new00 = sympy.expand((dx_dX ** 2 * G00 + 2 * dx_dX * dy_dX * G01
                              + dy_dX ** 2 * G11) * w)
        new01 = sympy.expand((dx_dX * G01 + dy_dX * G11) * w)
        new11 = sympy.expand(G11 * w)
        for m in range(4):
            for expr, i, j in [(new00, 0, 0), (new01, 0, 1), (new11, 1, 1)]:
                coeff = sympy.nsimplify(sympy.series(expr, X, 0, 4)
                                        .removeO().coeff(X, m))
                assert Fraction(int(sympy.fraction(coeff)[0]),
                                int(sympy.fraction(coeff)[1])) == engine.G[m][i][j]

    def test_y_shift_keeps_lower_a_slots(self):
        # model jet pulled back by a y-only shift at order l: the dx^2 slot
        # stays clean through order l - 1
        rng = random.Random(4)
        base = random_jet(rng, 2, 5)
        _, nf = model_form(base)
        cc = CoordChangeJet(n=2, N=5, delta={4: (Fraction(1, 2), Fraction(-1, 3))})
        moved = pullback(nf, cc)
        for m in range(4):
            assert moved.a(m) == 0

    def test_probe_factor(self):
        # the response of a[l-1] to gamma at order l is exactly 2 (l-1) gamma
        rng = random.Random(5)
        mj = random_jet(rng, 2, 5)
        for l in (2, 3, 4):
            g = Fraction(1, 3)
            new = pullback(mj, CoordChangeJet(n=2, N=5, gamma={l: g}))
            assert new.a(l - 1) - mj.a(l - 1) == 2 * (l - 1) * g


class TestNormalizeStep:
    def test_clean_input_is_identity(self):
        rng = random.Random(6)
        _, nf = model_form(random_jet(rng, 2, 3))
        cc, out = normalize_step(nf, 2)
        assert not cc.gamma and not cc.delta
        assert out.G == nf.G

    def test_single_slot_gamma(self):
        mj = MetricJet.from_slots(1, 2, [0, 1, 0], [[0], [0], [0]],
                                  [[[1]], [[0]], [[0]]])
        cc, out = normalize_step(mj, 1)
        assert cc.gamma[2] == Fraction(-1, 2)  # gamma = -a[1] / (2 * 1)
        assert out.a(1) == 0

    def test_single_slot_delta(self):
        mj = MetricJet.from_slots(1, 2, [0, 0, 0], [[0], [1], [0]],
                                  [[[1]], [[0]], [[0]]])
        cc, out = normalize_step(mj, 1)
        assert out.b(1) == (0,)
        assert cc.delta[2][0] != 0


class TestModelForm:
    def test_random_jets(self):
        rng = random.Random(7)
        for _ in range(15):
            n, N = rng.choice([1, 2, 3]), rng.choice([3, 4, 5])
            mj = random_jet(rng, n, N)
            cc, nf = model_form(mj)
            assert all(nf.a(m) == 0 for m in range(N + 1))
            assert all(all(v == 0 for v in nf.b(m)) for m in range(N + 1))
            assert pullback(mj, cc).G == nf.G

    def test_idempotent(self):
        rng = random.Random(8)
        mj = random_jet(rng, 2, 5)
        _, nf = model_form(mj)
        cc2, nf2 = model_form(nf)
        assert nf2.G == nf.G
        assert not cc2.gamma and not cc2.delta

    def test_truncation_stable(self):
        rng = random.Random(9)
        mj = random_jet(rng, 2, 5)
        _, nf = model_form(mj)
        _, nf3 = model_form(mj.truncate(3))
        assert nf3.G == nf.truncate(3).G
