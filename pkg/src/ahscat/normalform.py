"""Exact model-form reduction of boundary metric jets.

A metric jet is the truncated expansion G(x) = sum_m x^m G[m] of the matrix
in g = G(x) dz.dz / x^2, z = (x, y), at a fixed boundary point, with exact
rational entries.  Slots per order m: a[m] (dx^2 beyond the leading 1),
b[m] (dx.dy vector), c[m] (dy.dy block).  The model-form recursion removes
the a and b slots order by order through polynomial coordinate changes
x = xbar + gamma xbar^l, y = ybar + delta xbar^l.

The correction coefficients are solved from the module's own exact pullback
by probing (the response of the leading affected slots is linear in the
change), not transcribed from any closed-form factor; the factor the probes
confirm is Delta a[l-1] = 2 (l-1) gamma, hence gamma = -a[k] / (2k) for the
change at order l = k+1, and (c[0] delta)_j responses for the b slot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import PreconditionError

Poly = list  # list of Fraction coefficients, index = power


# ---------------------------------------------------------------------------
# exact polynomial helpers (truncated at a shared order)


def _ptrim(a: Poly, order: int) -> Poly:
    out = a[: order + 1] + [Fraction(0)] * max(0, order + 1 - len(a))
    return out


def _padd(a: Poly, b: Poly, order: int) -> Poly:
    a, b = _ptrim(a, order), _ptrim(b, order)
    return [x + y for x, y in zip(a, b)]


def _pmul(a: Poly, b: Poly, order: int) -> Poly:
    out = [Fraction(0)] * (order + 1)
    for i, ai in enumerate(a[: order + 1]):
        if ai == 0:
            continue
        for j, bj in enumerate(b[: order + 1 - i]):
            out[i + j] += ai * bj
    return out


def _pcompose(a: Poly, b: Poly, order: int) -> Poly:
    if len(b) > 0 and b[0] != 0:
        raise PreconditionError("inner polynomial must vanish at 0")
    out = [Fraction(0)] * (order + 1)
    if a:
        out[0] = Fraction(a[0])
    power = [Fraction(1)] + [Fraction(0)] * order
    for m in range(1, min(order, len(a) - 1) + 1):
        power = _pmul(power, b, order)
        if a[m] != 0:
            out = _padd(out, [a[m] * c for c in power], order)
    return out


def _preciprocal(a: Poly, order: int) -> Poly:
    if not a or a[0] == 0:
        raise PreconditionError("cannot invert a polynomial vanishing at 0")
    out = [Fraction(0)] * (order + 1)
    out[0] = Fraction(1) / a[0]
    for m in range(1, order + 1):
        s = sum((a[i] if i < len(a) else Fraction(0)) * out[m - i] for i in range(1, m + 1))
        out[m] = -s / a[0]
    return out


def _pderiv(a: Poly) -> Poly:
    return [i * c for i, c in enumerate(a)][1:] or [Fraction(0)]


# ---------------------------------------------------------------------------
# jets


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    raise PreconditionError(f"jet entries must be exact rationals, got {type(v).__name__}")


@dataclass(frozen=True)
class MetricJet:
    """Exact jet of the full (n+1)x(n+1) coefficient matrix, per order."""

    n: int
    N: int
    G: tuple  # G[m] is an (n+1)x(n+1) tuple-of-tuples of Fractions

    @classmethod
    def from_slots(cls, n: int, N: int, a: Sequence, b: Sequence, c: Sequence) -> "MetricJet":
        Gs = []
        for m in range(N + 1):
            M = [[Fraction(0)] * (n + 1) for _ in range(n + 1)]
            am = _as_fraction(a[m]) if m < len(a) else Fraction(0)
            M[0][0] = am + (1 if m == 0 else 0)
            bm = b[m] if m < len(b) else [0] * n
            for i in range(n):
                M[0][i + 1] = M[i + 1][0] = _as_fraction(bm[i])
            cm = c[m] if m < len(c) else [[0] * n for _ in range(n)]
            for i in range(n):
                for jj in range(n):
                    M[i + 1][jj + 1] = _as_fraction(cm[i][jj])
            Gs.append(tuple(tuple(row) for row in M))
        jet = cls(n=n, N=N, G=tuple(Gs))
        jet._validate()
        return jet

    def _validate(self):
        for m, M in enumerate(self.G):
            for i in range(self.n + 1):
                for jj in range(self.n + 1):
                    if M[i][jj] != M[jj][i]:
                        raise PreconditionError(f"order-{m} block not symmetric")
        if self.a(0) != 0 or any(v != 0 for v in self.b(0)):
            raise PreconditionError("leading form must be dx^2 + h(0): a[0] = 0, b[0] = 0")
        # c[0] positive definite, checked exactly by leading principal minors
        c0 = [list(row[1:]) for row in self.G[0][1:]]
        work = [row[:] for row in c0]
        for t in range(self.n):
            minor = _det(
                [[work[i][jj] for jj in range(t + 1)] for i in range(t + 1)])
            if minor <= 0:
                raise PreconditionError("c[0] must be positive definite")

    def a(self, m: int) -> Fraction:
        return self.G[m][0][0] - (1 if m == 0 else 0)

    def b(self, m: int) -> tuple:
        return tuple(self.G[m][0][i + 1] for i in range(self.n))

    def c(self, m: int) -> tuple:
        return tuple(tuple(self.G[m][i + 1][jj + 1] for jj in range(self.n))
                     for i in range(self.n))

    def truncate(self, N: int) -> "MetricJet":
        if N > self.N:
            raise PreconditionError("cannot extend a jet by truncation")
        return MetricJet(n=self.n, N=N, G=self.G[: N + 1])

    def to_json(self) -> str:
        def enc(fr: Fraction):
            return [fr.numerator, fr.denominator]

        return json.dumps({
            "n": self.n, "N": self.N,
            "G": [[[enc(v) for v in row] for row in M] for M in self.G],
        })

    @classmethod
    def from_json(cls, s: str) -> "MetricJet":
        d = json.loads(s)
        Gs = tuple(tuple(tuple(Fraction(v[0], v[1]) for v in row) for row in M)
                   for M in d["G"])
        jet = cls(n=d["n"], N=d["N"], G=Gs)
        jet._validate()
        return jet


def _det(M) -> Fraction:
    k = len(M)
    if k == 1:
        return M[0][0]
    out = Fraction(0)
    for jj in range(k):
        minor = [row[:jj] + row[jj + 1:] for row in M[1:]]
        out += (-1) ** jj * M[0][jj] * _det(minor)
    return out


@dataclass(frozen=True)
class CoordChangeJet:
    """x = xbar + sum_l gamma[l] xbar^l, y = ybar + sum_l delta[l] xbar^l, l >= 2."""

    n: int
    N: int
    gamma: dict = field(default_factory=dict)
    delta: dict = field(default_factory=dict)

    def __post_init__(self):
        for l in list(self.gamma) + list(self.delta):
            if l < 2:
                raise PreconditionError("coordinate changes must fix the boundary: l >= 2")

    def x_poly(self, order: int) -> Poly:
        out = [Fraction(0)] * (order + 1)
        if order >= 1:
            out[1] = Fraction(1)
        for l, g in self.gamma.items():
            if l <= order:
                out[l] += _as_fraction(g)
        return out

    def y_shift_polys(self, order: int) -> list:
        polys = [[Fraction(0)] * (order + 1) for _ in range(self.n)]
        for l, d in self.delta.items():
            if l <= order:
                for i in range(self.n):
                    polys[i][l] += _as_fraction(d[i])
        return polys

    def compose(self, other: "CoordChangeJet") -> "CoordChangeJet":
        """Change equivalent to applying ``self`` first, then ``other``."""
        order = max(self.N, other.N) + 1  # order N+1 terms still move order-N slots
        x1 = self.x_poly(order)
        x2 = other.x_poly(order)
        x_tot = _pcompose(x1, x2, order)
        y1 = self.y_shift_polys(order)
        y2 = other.y_shift_polys(order)
        gamma = {l: v for l, v in enumerate(x_tot) if l >= 2 and v != 0}
        delta: dict = {}
        for i in range(self.n):
            yi = _padd(_pcompose(y1[i], x2, order), y2[i], order)
            for l, v in enumerate(yi):
                if l >= 2 and v != 0:
                    delta.setdefault(l, [Fraction(0)] * self.n)[i] = v
        delta = {l: tuple(v) for l, v in delta.items()}
        return CoordChangeJet(n=self.n, N=order, gamma=gamma, delta=delta)


# ---------------------------------------------------------------------------
# pullback


def pullback(mj: MetricJet, cc: CoordChangeJet) -> MetricJet:
    """Exact jet of the metric in the new coordinates, through order N."""
    if cc.n != mj.n:
        raise PreconditionError("dimension mismatch between jet and coordinate change")
    n, N = mj.n, mj.N
    order = N
    xp = cc.x_poly(order + 1)
    dx = _ptrim(_pderiv(xp), order)
    yships = cc.y_shift_polys(order + 1)
    dys = [_ptrim(_pderiv(p), order) for p in yships]

    # J[i][j]: polynomial entries of dz_i = sum_j J[i][j] dzbar_j
    one = [Fraction(1)] + [Fraction(0)] * order
    zero = [Fraction(0)] * (order + 1)
    J = [[zero] * (n + 1) for _ in range(n + 1)]
    J[0][0] = dx
    for i in range(n):
        J[i + 1][0] = dys[i]
        J[i + 1][i + 1] = one

    # G entries composed with x(xbar)
    xinner = _ptrim(xp, order)
    Gc = [[None] * (n + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        for jj in range(n + 1):
            entry = [mj.G[m][i][jj] for m in range(N + 1)]
            Gc[i][jj] = _pcompose(entry, xinner, order)

    # weight (xbar / x(xbar))^2
    u = [xp[m + 1] for m in range(order + 1)]  # x / xbar
    w = _preciprocal(_pmul(u, u, order), order)

    out = [[zero] * (n + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        for jj in range(n + 1):
            acc = [Fraction(0)] * (order + 1)
            for p in range(n + 1):
                if all(v == 0 for v in J[p][i]):
                    continue
                for q in range(n + 1):
                    if all(v == 0 for v in J[q][jj]):
                        continue
                    acc = _padd(acc, _pmul(_pmul(J[p][i], J[q][jj], order),
                                           Gc[p][q], order), order)
            out[i][jj] = _pmul(acc, w, order)

    Gs = tuple(tuple(tuple(out[i][jj][m] for jj in range(n + 1)) for i in range(n + 1))
               for m in range(N + 1))
    res = MetricJet(n=n, N=N, G=Gs)
    res._validate()
    return res


# ---------------------------------------------------------------------------
# normalization


def _solve_linear(A, rhs):
    """Exact Gaussian elimination for a small Fraction system."""
    k = len(rhs)
    M = [row[:] + [rhs[i]] for i, row in enumerate(A)]
    for col in range(k):
        piv = next((r for r in range(col, k) if M[r][col] != 0), None)
        if piv is None:
            raise PreconditionError("singular probe system; cannot normalize")
        M[col], M[piv] = M[piv], M[col]
        M[col] = [v / M[col][col] for v in M[col]]
        for r in range(k):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [v - f * w for v, w in zip(M[r], M[col])]
    return [M[r][k] for r in range(k)]


def normalize_step(mj: MetricJet, k: int) -> tuple[CoordChangeJet, MetricJet]:
    """Kill the a and b slots at order k with a change at order k+1.

    The response of (a[k], b[k]) to (gamma, delta) at order k+1 is linear;
    the linear map is measured by probing the exact pullback with unit
    changes, then inverted exactly.
    """
    n = mj.n
    for m in range(k):
        if mj.a(m) != 0 or any(v != 0 for v in mj.b(m)):
            raise PreconditionError(f"slots below order {k} must already vanish")
    if mj.a(k) == 0 and all(v == 0 for v in mj.b(k)):
        ident = CoordChangeJet(n=n, N=mj.N)
        return ident, mj

    l = k + 1

    def slots(jet: MetricJet):
        return [jet.a(k)] + list(jet.b(k))

    base = slots(mj)
    cols = []
    probes = [CoordChangeJet(n=n, N=mj.N, gamma={l: Fraction(1)})]
    for i in range(n):
        d = [Fraction(0)] * n
        d[i] = Fraction(1)
        probes.append(CoordChangeJet(n=n, N=mj.N, delta={l: tuple(d)}))
    for pr in probes:
        resp = slots(pullback(mj, pr))
        cols.append([resp[i] - base[i] for i in range(n + 1)])
    A = [[cols[jj][i] for jj in range(n + 1)] for i in range(n + 1)]
    sol = _solve_linear(A, [-v for v in base])

    cc = CoordChangeJet(n=n, N=mj.N, gamma={l: sol[0]},
                        delta={l: tuple(sol[1:])} if any(v != 0 for v in sol[1:]) else {})
    new = pullback(mj, cc)
    if new.a(k) != 0 or any(v != 0 for v in new.b(k)):
        raise PreconditionError("probe solve failed to clear the slots exactly")
    return cc, new


def model_form(mj: MetricJet, N: Optional[int] = None) -> tuple[CoordChangeJet, MetricJet]:
    """Remove all a and b slots through order N by the order-by-order recursion."""
    if N is None:
        N = mj.N
    if N > mj.N:
        raise PreconditionError("requested order beyond the jet truncation")
    cur = mj.truncate(mj.N)
    total = CoordChangeJet(n=mj.n, N=mj.N)
    for k in range(1, N + 1):
        cc, cur = normalize_step(cur, k)
        total = total.compose(cc)
    return total, cur
