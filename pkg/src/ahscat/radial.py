"""Complex-valued radial ODE engine.

Pipeline per boundary mode: seed the exponentially decaying solution in the
far field, integrate inward in the variable t = log x (which regularizes the
singular point), then match against the two-exponent Frobenius basis at a
small x_match to read off (f_plus, f_minus) and the scattering eigenvalue
s = f_plus / f_minus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import seriestools as st
from .errors import ConvergenceError, PreconditionError
from .models import ModelFamily, RadialProblem

FROBENIUS_ORDER = 12
_OVERFLOW_NORM = 1e120


# ---------------------------------------------------------------------------
# far field


def _kbessel_asymptotic(nu: complex, z: float, terms: int = 10,
                        tol: float = 1e-9) -> tuple[complex, complex]:
    """(K_nu(z), K_nu'(z)) from the large-z asymptotic series.

    K_nu(z) ~ sqrt(pi/2z) e^{-z} sum_m a_m z^{-m},
    a_m = prod_{i<=m} (4 nu^2 - (2i-1)^2) / (8 i).
    """
    S = 1.0 + 0.0j
    Sp = 0.0 + 0.0j   # d/dz of the sum
    a = 1.0 + 0.0j
    last = 1.0
    for m in range(1, terms + 1):
        a = a * (4.0 * nu * nu - (2 * m - 1) ** 2) / (8.0 * m)
        term = a / z ** m
        S += term
        Sp += -m * term / z
        last = abs(term)
    if last > tol:
        raise ConvergenceError(
            f"far-field asymptotic error estimate {last:.2e} above tolerance at z = {z:.3g}")
    pref = math.sqrt(math.pi / (2.0 * z)) * math.exp(-z)
    K = pref * S
    Kp = pref * (-S - S / (2.0 * z) + Sp)
    return K, Kp


def farfield_init(rp: RadialProblem, x_start: float) -> tuple[complex, complex]:
    """Seed (value, log-derivative) of the decaying solution at x_start.

    The derivative is with respect to t = log x.  Cylinder problems use the
    decaying branch x^{n/2} K_nu(lambda x); black-hole problems impose a
    Dirichlet wall at the configured far boundary.  Absolute normalization is
    arbitrary, only the ratio f_plus / f_minus survives.
    """
    ff = rp.farfield
    if ff["kind"] == "dirichlet":
        if abs(x_start - ff["x_far"]) > 1e-12 * ff["x_far"]:
            raise PreconditionError("Dirichlet far field must be seeded at its wall")
        return (0.0 + 0.0j, 1.0 + 0.0j)
    lam, nu, n = ff["lam"], ff["nu"], ff["n"]
    z = lam * x_start
    if z < 25.0:
        raise PreconditionError(f"far-field seed needs lambda*x_start >= 25, got {z:.3g}")
    K, Kp = _kbessel_asymptotic(nu, z)
    val = x_start ** (n / 2.0) * K
    # d/dt [x^{n/2} K(lam x)] = (n/2) val + x^{n/2} * lam x * K'
    der = (n / 2.0) * val + x_start ** (n / 2.0) * z * Kp
    scale = max(abs(val), abs(der))
    return val / scale, der / scale


# ---------------------------------------------------------------------------
# inward integration


def integrate_inward(rp: RadialProblem, init: tuple[complex, complex], x_match: float,
                     x_start: Optional[float] = None, samples: Optional[Sequence[float]] = None,
                     rtol: float = 1e-12) -> dict:
    """Integrate x^2 a'' + x p a' + q a = 0 inward from x_start to sample points.

    In t = log x the equation reads  a_tt + (p - 1) a_t + q a = 0,  which is
    regular at t -> -inf.  Returns {x: (a, a_t)} plus the tracked
    renormalization factor under key "log_scale" (it cancels in ratios).
    """
    if x_start is None:
        x_start = rp.x_max
    if samples is None:
        samples = [x_match, 0.5 * x_match]
    samples = sorted(set(float(s) for s in samples), reverse=True)
    if samples[0] > x_start:
        raise PreconditionError("sample point beyond the integration start")

    def rhs(t, y):
        x = math.exp(t)
        return [y[1], -(rp.p(x) - 1.0) * y[1] - rp.q(x) * y[0]]

    out: dict = {}
    log_scale = 0.0
    y = np.array([init[0], init[1]], dtype=complex)
    t_now = math.log(x_start)
    for x_s in samples:
        t_target = math.log(x_s)
        while True:
            big = lambda t, yy: float(np.max(np.abs(yy)) - _OVERFLOW_NORM)
            big.terminal = True
            big.direction = 1.0
            sol = solve_ivp(rhs, (t_now, t_target), y, method="DOP853",
                            rtol=rtol, atol=1e-14, events=big, dense_output=False)
            if not sol.success and sol.status != 1:
                raise ConvergenceError(f"inward integration failed: {sol.message}")
            y = sol.y[:, -1]
            t_now = sol.t[-1]
            if sol.status == 1:  # overflow guard tripped, renormalize and resume
                nrm = float(np.max(np.abs(y)))
                y = y / nrm
                log_scale += math.log(nrm)
                continue
            break
        out[x_s] = (complex(y[0]), complex(y[1]))
    out["log_scale"] = log_scale
    return out


# ---------------------------------------------------------------------------
# Frobenius basis and matching


@dataclass(frozen=True)
class FrobeniusBasis:
    """Truncated series solutions x^rho (1 + c_1 x + ...) at both exponents."""

    exponents: tuple[complex, complex]
    series_coeffs: tuple[np.ndarray, np.ndarray]
    truncation_order: int
    validity_radius: float

    @classmethod
    def from_problem(cls, rp: RadialProblem, order: int = FROBENIUS_ORDER) -> "FrobeniusBasis":
        rho_pair = rp.indicial_roots()
        p_ser = st.trim(rp.p_series, order)
        q_ser = st.trim(rp.q_series, order)
        p0, q0 = p_ser[0], q_ser[0]

        def indicial(sig: complex) -> complex:
            return sig * (sig - 1.0) + p0 * sig + q0

        all_coeffs = []
        for rho in rho_pair:
            c = np.zeros(order + 1, dtype=complex)
            c[0] = 1.0
            for m in range(1, order + 1):
                s = 0.0 + 0.0j
                for i in range(1, m + 1):
                    s += (p_ser[i] * (rho + m - i) + q_ser[i]) * c[m - i]
                denom = indicial(rho + m)
                if abs(denom) < 1e-10:
                    raise PreconditionError(
                        f"Frobenius recurrence denominator vanishes at order {m}")
                c[m] = -s / denom
            all_coeffs.append(c)

        # validity radius: last retained term must be negligible there
        x0 = rp.x_series
        for c in all_coeffs:
            tail = abs(c[order])
            if tail > 0:
                x0 = min(x0, (1e-13 / tail) ** (1.0 / order))
        return cls(exponents=(rho_pair[0], rho_pair[1]),
                   series_coeffs=(all_coeffs[0], all_coeffs[1]),
                   truncation_order=order, validity_radius=x0)

    def eval(self, which: int, x: float) -> tuple[complex, complex]:
        """(u, du/dt) of basis solution ``which`` at x."""
        rho = self.exponents[which]
        c = self.series_coeffs[which]
        m = np.arange(len(c))
        xs = x ** m
        u = x ** rho * np.sum(c * xs)
        ut = x ** rho * np.sum((rho + m) * c * xs)
        return complex(u), complex(ut)


@dataclass(frozen=True)
class ModeScatteringRecord:
    mode: object
    lam: float
    f_plus: complex
    f_minus: complex
    s: complex
    quality: float
    eps: float = 0.0
    flags: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict)


def _match_at(basis: FrobeniusBasis, x: float, a: complex, at: complex
              ) -> tuple[complex, complex, float]:
    up, upt = basis.eval(0, x)
    um, umt = basis.eval(1, x)
    A = np.array([[up, um], [upt, umt]], dtype=complex)
    cond = np.linalg.cond(A)
    f = np.linalg.solve(A, np.array([a, at], dtype=complex))
    return complex(f[0]), complex(f[1]), float(cond)


def frobenius_match(rp: RadialProblem, samples: dict, basis: FrobeniusBasis
                    ) -> ModeScatteringRecord:
    """Read (f_plus, f_minus) from integrated samples; s = f_plus / f_minus.

    The primary match uses the largest sample point; the quality diagnostic is
    the relative disagreement of s re-derived at the next sample point.
    """
    xs = sorted((k for k in samples if isinstance(k, float)), reverse=True)
    x1 = xs[0]
    if x1 > basis.validity_radius * (1 + 1e-12):
        raise PreconditionError(f"match point {x1:.3g} beyond series validity radius "
                                f"{basis.validity_radius:.3g}")
    a, at = samples[x1]
    fp, fm, cond = _match_at(basis, x1, a, at)
    if cond > 1e12:
        raise PreconditionError("Frobenius matching system is ill conditioned")

    flags = []
    scale = max(abs(fp), abs(fm))
    if abs(fm) <= 1e-10 * scale:
        flags.append("pole")
        s = complex(np.inf)
        quality = np.inf
    else:
        s = fp / fm
        quality = np.inf
        if len(xs) > 1:
            a2, at2 = samples[xs[1]]
            fp2, fm2, _ = _match_at(basis, xs[1], a2, at2)
            if abs(fm2) > 0:
                s2 = fp2 / fm2
                quality = abs(s - s2) / max(abs(s), 1e-300)
    return ModeScatteringRecord(mode=rp.mode, lam=rp.lambda0, f_plus=fp, f_minus=fm,
                                s=s, quality=quality, eps=rp.eps,
                                flags=tuple(flags), meta={"x_match": x1, "cond": cond})


# ---------------------------------------------------------------------------
# drivers


def choose_x_match(rp: RadialProblem, basis: FrobeniusBasis) -> float:
    lam = rp.lambda0
    x = basis.validity_radius
    if rp.farfield["kind"] == "bessel" and lam > 0:
        x = min(x, 0.4 / lam, 0.2)
    else:
        x = min(x, 0.3 * rp.x_max)
    return x


def choose_x_start(rp: RadialProblem) -> float:
    if rp.farfield["kind"] == "dirichlet":
        return rp.farfield["x_far"]
    lam = rp.lambda0
    return max(25.0 / lam, rp.x_max if rp.x_max < 25.0 / lam else 25.0 / lam)


def solve_mode(rp: RadialProblem, rtol: float = 1e-12,
               x_start: Optional[float] = None) -> ModeScatteringRecord:
    """End-to-end solve: far-field seed, inward integration, Frobenius match."""
    if rp.indicial_only:
        return ModeScatteringRecord(mode=rp.mode, lam=0.0, f_plus=0.0, f_minus=1.0,
                                    s=0.0, quality=0.0, eps=rp.eps,
                                    flags=("indicial-only",))
    basis = FrobeniusBasis.from_problem(rp)
    x_match = choose_x_match(rp, basis)
    if x_start is None:
        x_start = choose_x_start(rp)
    init = farfield_init(rp, x_start)
    samples = integrate_inward(rp, init, x_match, x_start=x_start, rtol=rtol)
    return frobenius_match(rp, samples, basis)


def scatter_sweep(family: ModelFamily, modes: Sequence, rtol: float = 1e-12,
                  threads: int = 1) -> list[ModeScatteringRecord]:
    """Solve every (eps, mode) pair; ordering follows the input grids.

    Failed records are tagged, not dropped.  With threads > 1 the solves fan
    out to a pool; output order is identical to serial execution.
    """
    tasks = [(eps, mode) for eps in family.eps_list for mode in modes]

    def run(task):
        eps, mode = task
        try:
            rec = solve_mode(family.problem(eps, mode), rtol=rtol)
        except Exception as exc:  # tagged, sweep continues
            rec = ModeScatteringRecord(mode=tuple(np.atleast_1d(mode).astype(int).tolist()),
                                       lam=float("nan"), f_plus=complex("nan"),
                                       f_minus=complex("nan"), s=complex("nan"),
                                       quality=float("inf"), eps=eps,
                                       flags=("error",), meta={"error": str(exc)})
        return rec

    if threads > 1 and len(tasks) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, tasks))
    return [run(t) for t in tasks]


def eps_derivative(family: ModelFamily, mode, rtol: float = 1e-12,
                   richardson: bool = False) -> complex:
    """d s / d eps at eps = 0 by symmetric central differences."""
    h = family.spacing
    if h is None:
        raise PreconditionError("eps grid must be symmetric (-h, 0, +h) for the derivative")

    def s_at(eps: float) -> complex:
        return solve_mode(family.problem(eps, mode), rtol=rtol).s

    d_h = (s_at(h) - s_at(-h)) / (2.0 * h)
    if not richardson:
        return d_h
    d_half = (s_at(h / 2.0) - s_at(-h / 2.0)) / h
    return (4.0 * d_half - d_h) / 3.0
