"""Catalog of separable model geometries.

Each model yields, per boundary mode, a ``RadialProblem``: the normalized
second-order ODE  x^2 a'' + x p(x) a' + q(x) a = 0  on (0, x_max], together
with the Taylor coefficients of p and q near the regular singular point and a
far-field descriptor selecting the decaying solution.

Cylinder models live on R_+ x T^n with metric (dx^2 + h(x) dy.dy)/x^2,
h(x) = h0 + eps x^k chi(x) L, and separate exactly into Fourier modes.
Black-hole models (Schwarzschild, De Sitter-Schwarzschild) separate into
spherical harmonics; the radial variable is alpha, the horizon defining
function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import seriestools as st
from .errors import PreconditionError
from .specfun import SpectralPoint, check_expansion_hypothesis

SERIES_ORDER = 16


# ---------------------------------------------------------------------------
# cutoff profile


@dataclass(frozen=True)
class Cutoff:
    """Smooth profile chi(x): identically 1 on [0, x_a], 0 on [x_b, inf)."""

    x_a: float = 0.25
    x_b: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.x_a < self.x_b:
            raise PreconditionError(f"cutoff needs 0 < x_a < x_b, got ({self.x_a}, {self.x_b})")

    @staticmethod
    def _bump(t: float) -> float:
        return math.exp(-1.0 / t) if t > 0.0 else 0.0

    def __call__(self, x: float) -> float:
        if x <= self.x_a:
            return 1.0
        if x >= self.x_b:
            return 0.0
        t = (self.x_b - x) / (self.x_b - self.x_a)
        g, gc = self._bump(t), self._bump(1.0 - t)
        return g / (g + gc)

    def deriv(self, x: float) -> float:
        if x <= self.x_a or x >= self.x_b:
            return 0.0
        w = self.x_b - self.x_a
        t = (self.x_b - x) / w
        g, gc = self._bump(t), self._bump(1.0 - t)
        dg = g / (t * t)
        dgc = gc / ((1.0 - t) * (1.0 - t))
        # d/dt [g/(g+gc)] = (dg*gc + g*dgc)/(g+gc)^2 ; dt/dx = -1/w
        return -(dg * gc + g * dgc) / ((g + gc) ** 2 * w)


# ---------------------------------------------------------------------------
# domain data


@dataclass(frozen=True)
class BoundaryMetric:
    """Flat-torus boundary metric h0 (symmetric positive definite)."""

    n: int
    h0: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h0, dtype=float)
        object.__setattr__(self, "h0", h)
        if h.shape != (self.n, self.n) or not np.allclose(h, h.T):
            raise PreconditionError("h0 must be a symmetric n x n matrix")
        if np.min(np.linalg.eigvalsh(h)) <= 0:
            raise PreconditionError("h0 must be positive definite")

    @classmethod
    def euclidean(cls, n: int) -> "BoundaryMetric":
        return cls(n=n, h0=np.eye(n))

    def covector_length(self, xi: np.ndarray) -> float:
        """|xi| induced by h0 (i.e. sqrt(xi . h0^{-1} . xi))."""
        xi = np.asarray(xi, dtype=float)
        return float(np.sqrt(xi @ np.linalg.solve(self.h0, xi)))


@dataclass(frozen=True)
class PerturbationJet:
    """Leading jet of a metric/potential perturbation: x^k (L, W) with cutoff."""

    k: int
    L: np.ndarray
    W: float
    cutoff: Cutoff = field(default_factory=Cutoff)

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise PreconditionError(f"jet order k must be a positive integer, got {self.k}")
        L = np.asarray(self.L, dtype=float)
        object.__setattr__(self, "L", L)
        if L.ndim != 2 or not np.allclose(L, L.T):
            raise PreconditionError("L must be symmetric")

    def profile(self, x: float) -> float:
        return x ** self.k * self.cutoff(x)

    def profile_deriv(self, x: float) -> float:
        return self.k * x ** (self.k - 1) * self.cutoff(x) + x ** self.k * self.cutoff.deriv(x)


@dataclass(frozen=True)
class RadialProblem:
    """Normalized radial ODE x^2 a'' + x p(x) a' + q(x) a = 0 for one mode."""

    kind: str
    mode: object
    sp: SpectralPoint
    p: Callable[[float], complex]
    q: Callable[[float], complex]
    p_series: np.ndarray
    q_series: np.ndarray
    x_series: float
    x_max: float
    lambda0: float
    farfield: dict
    eps: float = 0.0
    indicial_only: bool = False
    meta: dict = field(default_factory=dict)

    def indicial_roots(self) -> tuple[complex, complex]:
        """Roots of rho(rho-1) + p(0) rho + q(0), larger real part first."""
        p0, q0 = self.p_series[0], self.q_series[0]
        b = p0 - 1.0
        disc = np.sqrt(complex(b * b - 4.0 * q0))
        r1, r2 = (-b + disc) / 2.0, (-b - disc) / 2.0
        return (r1, r2) if r1.real >= r2.real else (r2, r1)

    def lambda2(self, x: float) -> complex:
        raise NotImplementedError


@dataclass(frozen=True)
class CylinderProblem(RadialProblem):
    bm: Optional[BoundaryMetric] = None
    jets: tuple = ()

    def lambda2(self, x: float) -> float:
        """Effective frequency-squared j . h(x)^{-1} . j of this mode."""
        j = np.asarray(self.mode, dtype=float)
        h = self.bm.h0.copy()
        for pj in self.jets:
            h = h + self.eps * pj.profile(x) * pj.L
        return float(j @ np.linalg.solve(h, j))


# ---------------------------------------------------------------------------
# cylinder models


def _as_jets(pj) -> tuple:
    if pj is None:
        return ()
    if isinstance(pj, PerturbationJet):
        return (pj,)
    return tuple(pj)


def _cylinder_series(bm: BoundaryMetric, jets: tuple, eps: float,
                     j: np.ndarray, sp: SpectralPoint, order: int = SERIES_ORDER):
    """Taylor coefficients of p, q on the region where all cutoffs are 1."""
    n, z = bm.n, sp.zeta
    p_ser = np.zeros(order + 1, dtype=complex)
    q_ser = np.zeros(order + 1, dtype=complex)
    p_ser[0] = -(n - 1)
    q_ser[0] = -z * (z - n)

    # matrix Taylor series of h(x) = h0 + eps sum_i x^{k_i} L_i
    Hc = np.zeros((order + 1, n, n), dtype=complex)
    Hc[0] = bm.h0
    for pj in jets:
        if pj.k <= order:
            Hc[pj.k] += eps * pj.L
        if pj.W != 0.0 and pj.k <= order:
            q_ser[pj.k] += -eps * pj.W

    # series inverse: G[m] = -h0^{-1} sum_{i=1..m} Hc[i] G[m-i]
    h0inv = np.linalg.inv(bm.h0)
    G = np.zeros_like(Hc)
    G[0] = h0inv
    for m in range(1, order + 1):
        acc = np.zeros((n, n), dtype=complex)
        for i in range(1, m + 1):
            acc += Hc[i] @ G[m - i]
        G[m] = -h0inv @ acc

    lam2 = np.einsum("i,mij,j->m", j, G, j)
    q_ser[2:] += -lam2[: order - 1]

    # (log det h)' = trace(h^{-1} h'); contributes (1/2) x (log det h)' to p
    Hp = np.zeros_like(Hc)
    for m in range(order):
        Hp[m] = (m + 1) * Hc[m + 1]
    for m in range(order):
        tr = sum(np.trace(G[i] @ Hp[m - i]) for i in range(m + 1))
        if m + 1 <= order:
            p_ser[m + 1] += 0.5 * tr
    return p_ser, q_ser


def cylinder_problem(bm: BoundaryMetric, pj, eps: float,
                     mode: Sequence[int], sp: SpectralPoint, x_max: float = 100.0,
                     ) -> CylinderProblem:
    """Radial problem of one Fourier mode on the perturbed cylinder.

    ``pj`` may be a single PerturbationJet, a sequence of them (stacked
    perturbation orders), or None.  The mode e^{i j.y} separates with
    effective frequency-squared lambda^2(x) = j . h(x)^{-1} . j; the radial
    ODE is

        -x^2 a'' + (n-1) x a' - (1/2) x^2 (log det h)' a'
          + x^2 lambda^2(x) a + V(x) a + zeta (zeta - n) a = 0,

    with h(x) = h0 + eps sum_i x^{k_i} chi L_i and V = eps sum_i x^{k_i} chi W_i.
    """
    check_expansion_hypothesis(sp)
    if sp.n != bm.n:
        raise PreconditionError("boundary dimension mismatch between metric and spectral point")
    j = np.asarray(mode, dtype=float)
    if j.shape != (bm.n,):
        raise PreconditionError(f"mode must be an integer {bm.n}-vector")
    n, z = bm.n, sp.zeta
    jets = _as_jets(pj) if eps != 0.0 else ()

    if jets:
        # positivity of h(x) on the support of the perturbation
        x_b = max(p.cutoff.x_b for p in jets)
        for x in np.linspace(0.0, x_b, 64):
            h = bm.h0 + sum(eps * p.profile(x) * p.L for p in jets)
            if np.min(np.linalg.eigvalsh(h)) <= 0:
                raise PreconditionError(f"h(x) loses positivity at x = {x:.4f} for eps = {eps}")

    def p_num(x: float) -> complex:
        if not jets:
            return complex(-(n - 1))
        h = bm.h0 + sum(eps * p.profile(x) * p.L for p in jets)
        hprime = sum(eps * p.profile_deriv(x) * p.L for p in jets)
        dlogdet = np.trace(np.linalg.solve(h, hprime))
        return complex(-(n - 1) + 0.5 * x * dlogdet)

    def q_num(x: float) -> complex:
        h = bm.h0
        V = 0.0
        for p in jets:
            phi = p.profile(x)
            h = h + eps * phi * p.L
            V = V + eps * phi * p.W
        lam2 = j @ np.linalg.solve(h, j)
        return complex(-x * x * lam2 - V - z * (z - n))

    p_ser, q_ser = _cylinder_series(bm, jets, eps, j, sp)
    lam0 = math.sqrt(float(j @ np.linalg.solve(bm.h0, j)))
    x_series = min((p.cutoff.x_a for p in jets), default=x_max)

    return CylinderProblem(
        kind="cylinder",
        mode=tuple(int(v) for v in np.atleast_1d(mode)),
        sp=sp,
        p=p_num,
        q=q_num,
        p_series=p_ser,
        q_series=q_ser,
        x_series=x_series,
        x_max=x_max,
        lambda0=lam0,
        farfield={"kind": "bessel", "nu": sp.nu, "lam": lam0, "n": n},
        eps=eps,
        indicial_only=(lam0 == 0.0),
        bm=bm,
        jets=jets,
    )


def hyperbolic_exact_eigenvalue(sp: SpectralPoint, lam: float) -> complex:
    """Exact scattering eigenvalue c_scatter(zeta, n) * lambda^(2 zeta - n)."""
    from .specfun import c_scatter

    if lam <= 0:
        raise PreconditionError("lambda must be positive")
    return c_scatter(sp) * lam ** (2 * sp.zeta - sp.n)


# ---------------------------------------------------------------------------
# black-hole models


@dataclass(frozen=True)
class BlackHoleModel:
    """Schwarzschild (Lambda = 0) or De Sitter-Schwarzschild exterior model."""

    m: float
    Lambda: float = 0.0

    def __post_init__(self):
        if self.m <= 0:
            raise PreconditionError("mass must be positive")
        if self.Lambda < 0 or (self.Lambda > 0 and not 0 < 9 * self.m ** 2 * self.Lambda < 1):
            raise PreconditionError("need 0 < 9 m^2 Lambda < 1 (or Lambda = 0)")

    @property
    def kind(self) -> str:
        return "schwarzschild" if self.Lambda == 0.0 else "desitter-schwarzschild"

    def alpha2(self, r: float) -> float:
        return 1.0 - 2.0 * self.m / r - self.Lambda * r * r / 3.0

    def alpha2_prime(self, r: float) -> float:
        return 2.0 * self.m / r ** 2 - 2.0 * self.Lambda * r / 3.0

    def alpha2_second(self, r: float) -> float:
        return -4.0 * self.m / r ** 3 - 2.0 * self.Lambda / 3.0

    def horizons(self) -> tuple[float, ...]:
        """Roots of alpha^2: (r_+,) for Schwarzschild, (r_+, r_++) otherwise."""
        if self.Lambda == 0.0:
            return (2.0 * self.m,)
        r_peak = (3.0 * self.m / self.Lambda) ** (1.0 / 3.0)
        r_plus = brentq(self.alpha2, 2.0 * self.m * (1 - 1e-12), r_peak, xtol=1e-15, rtol=8.9e-16)
        hi = 2.0 / math.sqrt(self.Lambda)
        r_pp = brentq(self.alpha2, r_peak, hi * 2, xtol=1e-15, rtol=8.9e-16)
        return (r_plus, r_pp)

    @property
    def r_plus(self) -> float:
        return self.horizons()[0]

    def surface_slope(self) -> float:
        """kappa = (d alpha^2/dr)/2 at r_+; sets the frozen radial coefficient kappa^2."""
        return 0.5 * self.alpha2_prime(self.r_plus)

    def r_of_alpha(self, alpha: float) -> float:
        if self.Lambda == 0.0:
            return 2.0 * self.m / (1.0 - alpha * alpha)
        r_peak = (3.0 * self.m / self.Lambda) ** (1.0 / 3.0)
        a2 = alpha * alpha
        return brentq(lambda r: self.alpha2(r) - a2, self.r_plus * (1 - 1e-13), r_peak,
                      xtol=1e-15, rtol=8.9e-16)


def _bh_r_series(bh: BlackHoleModel, order: int) -> np.ndarray:
    """Taylor coefficients of r(alpha) - expansion at the black-hole horizon."""
    half = order // 2 + 2
    rp = bh.r_plus
    # alpha^2 = phi(r_+ + s) as a series in s
    u = np.zeros(half + 1, dtype=complex)
    for jj in range(1, half + 1):
        # j-th derivative of phi at r_+
        dj = 2.0 * bh.m * (-1) ** (jj + 1) * math.factorial(jj) / rp ** (jj + 1)
        if jj == 1:
            dj += -2.0 * bh.Lambda * rp / 3.0
        elif jj == 2:
            dj += -2.0 * bh.Lambda / 3.0
        u[jj] = dj / math.factorial(jj)
    s_of_u = st.reversion(u, half)  # s as a series in u = alpha^2
    r_ser = np.zeros(order + 1, dtype=complex)
    r_ser[0] = rp
    for jj in range(1, half + 1):
        if 2 * jj <= order:
            r_ser[2 * jj] = s_of_u[jj]
    return r_ser


def blackhole_problem(bh: BlackHoleModel, l: int, sp: SpectralPoint,
                      pj: Optional[PerturbationJet] = None, eps: float = 0.0,
                      r_far: Optional[float] = None) -> RadialProblem:
    """Radial problem of the spherical-harmonic mode Y_l near the horizon.

    Works in the horizon defining function alpha; the stationary operator is

        P = -alpha^2 r^{-2} d_r (r^2 alpha^2 d_r) + (alpha^2/r^2) Delta_omega,

    and the spectral constant E is fixed so that the weighted unknown
    b = alpha^{n/2} a has indicial roots {zeta, n - zeta} (n = 2):
    E = -kappa^2 (zeta - n/2)^2 with kappa the surface slope.  Real zeta with
    zeta > n/2 gives an exponential far-field dichotomy, which is the
    convention used for desk-scale sweeps.
    """
    check_expansion_hypothesis(sp)
    n = 2
    if sp.n != n:
        raise PreconditionError("black-hole boundary dimension is n = 2")
    if l < 0 or int(l) != l:
        raise PreconditionError("spherical-harmonic degree l must be a non-negative integer")
    h_c, w_c, k = 0.0, 0.0, 1
    if pj is not None:
        if not np.allclose(pj.L, pj.L[0, 0] * np.eye(pj.L.shape[0])):
            raise PreconditionError("black-hole perturbations must be spherically symmetric "
                                    "(L proportional to the identity)")
        h_c, w_c, k = float(pj.L[0, 0]), float(pj.W), pj.k

    kappa = bh.surface_slope()
    E = -kappa ** 2 * (sp.zeta - n / 2) ** 2
    ll = float(l * (l + 1))

    def pq_num(alpha: float) -> tuple[complex, complex]:
        r = bh.r_of_alpha(alpha)
        d1, d2 = bh.alpha2_prime(r), bh.alpha2_second(r)
        p = 1.0 + 2.0 * alpha ** 2 * (2.0 * r * d1 + r * r * d2) / (r * r * d1 * d1)
        G = alpha * alpha / (r * r)
        pert = 0.0
        if pj is not None and eps != 0.0:
            chi = pj.cutoff(alpha)
            pert = eps * alpha ** k * chi * (h_c * ll + w_c)
        q = -(4.0 / (d1 * d1)) * (G * ll + pert - E)
        # weight shift a -> b = alpha^{n/2} a
        return complex(p - n), complex(q + (n / 2) * (n / 2 + 1) - (n / 2) * p)

    def p_num(alpha: float) -> complex:
        return pq_num(alpha)[0]

    def q_num(alpha: float) -> complex:
        return pq_num(alpha)[1]

    order = SERIES_ORDER
    r_ser = _bh_r_series(bh, order)
    r_shift = r_ser.copy()
    r_shift[0] = 0.0  # r - r_+, for composing Taylor series of phi-derivatives
    rp = bh.r_plus

    def phi_deriv_series(j0: int) -> np.ndarray:
        # series of phi^{(j0)}(r(alpha)) in alpha
        coeffs = np.zeros(order + 1, dtype=complex)
        for jj in range(order + 1):
            tot = jj + j0
            d = 2.0 * bh.m * (-1) ** (tot + 1) * math.factorial(tot) / rp ** (tot + 1)
            if tot == 1:
                d += -2.0 * bh.Lambda * rp / 3.0
            elif tot == 2:
                d += -2.0 * bh.Lambda / 3.0
            elif tot == 0:
                d = 0.0
            coeffs[jj] = d / math.factorial(jj)
        return st.compose(coeffs, r_shift, order)

    d1_ser = phi_deriv_series(1)
    r2_ser = st.mul(r_ser, r_ser, order)
    W_ser = 0.5 * st.mul(r2_ser, d1_ser, order)
    Wp_ser = np.append(st.derivative(W_ser), 0.0)[: order + 1]
    alpha_ser = np.zeros(order + 1, dtype=complex)
    alpha_ser[1] = 1.0
    p_ser = st.mul(st.mul(alpha_ser, Wp_ser, order), st.reciprocal(W_ser, order), order)
    p_ser[0] += 1.0

    inv_d1sq = st.reciprocal(st.mul(d1_ser, d1_ser, order), order)
    G_ser = st.mul(st.mul(alpha_ser, alpha_ser, order), st.reciprocal(r2_ser, order), order)
    inner = G_ser * ll
    if pj is not None and eps != 0.0:
        pert_ser = np.zeros(order + 1, dtype=complex)
        if k <= order:
            pert_ser[k] += eps * (w_c + h_c * ll)
        inner = inner + pert_ser
    inner[0] -= E
    q_ser = -4.0 * st.mul(inv_d1sq, inner, order)
    p_ser_b = p_ser.copy()
    p_ser_b[0] -= n
    q_ser_b = q_ser - (n / 2) * p_ser
    q_ser_b[0] += (n / 2) * (n / 2 + 1)

    if r_far is None:
        r_far = 20.0 * bh.m if bh.Lambda == 0.0 else None
    if bh.Lambda == 0.0:
        alpha_far = math.sqrt(bh.alpha2(r_far))
    else:
        r_peak = (3.0 * bh.m / bh.Lambda) ** (1.0 / 3.0)
        r_far = r_far if r_far is not None else rp + 0.95 * (r_peak - rp)
        alpha_far = math.sqrt(bh.alpha2(r_far))

    x_series = 0.3 * alpha_far if pj is None else min(0.3 * alpha_far, pj.cutoff.x_a)
    return RadialProblem(
        kind="blackhole",
        mode=int(l),
        sp=sp,
        p=p_num,
        q=q_num,
        p_series=p_ser_b,
        q_series=q_ser_b,
        x_series=x_series,
        x_max=alpha_far,
        lambda0=math.sqrt(ll) if ll > 0 else 0.0,
        farfield={"kind": "dirichlet", "x_far": alpha_far},
        eps=eps,
        indicial_only=False,
        meta={"model": bh, "E": E, "kappa": kappa, "r_far": r_far},
    )


def normal_operator_coefficients(bh: BlackHoleModel) -> dict:
    """Frozen-coefficient data of P at the horizon, from the model functions.

    Returns the coefficient of (alpha D_alpha)^2 and of alpha^2 Delta_omega in
    the frozen operator, computed as limits of the engine's own coefficient
    functions.
    """
    rp = bh.r_plus
    kappa = bh.surface_slope()
    radial = kappa ** 2            # lim W(alpha)^2 / r^4
    angular = 1.0 / rp ** 2        # lim (alpha^2/r^2) / alpha^2
    return {"radial": radial, "angular": angular, "r_plus": rp, "kappa": kappa}


def zeta_for_lambda(bh: BlackHoleModel, lam: float) -> complex:
    """Spectral point of the physical energy lambda: exponents n/2 +- i mu."""
    kappa = bh.surface_slope()
    n = 2
    mu = math.sqrt(lam * lam + n * n / 4.0) / kappa
    return n / 2 + 1j * mu


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class ModelFamily:
    """Cylinder problems over an ordered eps grid, sharing modes and numerics."""

    bm: BoundaryMetric
    pj: object
    sp: SpectralPoint
    eps_list: tuple[float, ...]
    x_max: float = 100.0

    def problem(self, eps: float, mode: Sequence[int]) -> CylinderProblem:
        return cylinder_problem(self.bm, self.pj, eps, mode, self.sp, self.x_max)

    @property
    def spacing(self) -> Optional[float]:
        """Central-difference step when the grid is symmetric about 0."""
        e = sorted(self.eps_list)
        if len(e) == 3 and abs(e[0] + e[2]) < 1e-15 and abs(e[1]) < 1e-15:
            return e[2]
        return None


def family_jet(bm: BoundaryMetric, pj, eps_list: Sequence[float],
               sp: SpectralPoint, x_max: float = 100.0) -> ModelFamily:
    """Ordered family of cylinder problems for finite-difference derivatives."""
    jets = _as_jets(pj)
    for eps in eps_list:
        if eps == 0.0 or not jets:
            continue
        x_b = max(p.cutoff.x_b for p in jets)
        for x in np.linspace(0.0, x_b, 32):
            h = bm.h0 + sum(eps * p.profile(x) * p.L for p in jets)
            if np.min(np.linalg.eigvalsh(h)) <= 0:
                raise PreconditionError(f"h(x) not positive definite for eps = {eps}")
    return ModelFamily(bm=bm, pj=pj, sp=sp, eps_list=tuple(eps_list), x_max=x_max)
