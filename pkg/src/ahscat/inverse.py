"""Jet recovery from scattering data.

The forward theory says mode differences behave like a homogeneous symbol
evaluated at the mode covector.  Inversion proceeds in three stages: fit the
power law in |j| to detect the perturbation order k, extract per-direction
amplitudes, then solve the linear model

    amp(xi) = A1 (xi.H.xi) |xi|^(2 zeta - n - k - 2)
              + A2 (W - (1/4) k (n-k) T) |xi|^(2 zeta - n - k)

for the jet.  At a single order only the combination W - (1/4)k(n-k)T is
observable alongside the trace-free part of H; the caller must declare which
corollary hypothesis applies (L_zero or W_zero), which restores full rank.
The engine's raw eigenvalue ratio and the half-density-normalized operator
differ by one mode-independent factor; it is calibrated against a reference
perturbation, never assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConvergenceError, GateError, PreconditionError
from .models import BoundaryMetric, ModelFamily, PerturbationJet, family_jet
from .radial import eps_derivative
from .specfun import SpectralPoint, a_coeffs, solvability_determinant
from .symbolcalc import order_bookkeeping

_RESIDUAL_RELIABLE = 0.1


@dataclass(frozen=True)
class FitResult:
    slope: float
    coefficient: complex
    residual: float
    modes_used: tuple
    reliable: bool = True
    meta: dict = field(default_factory=dict)


def _records_to_arrays(records) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lams, vals, quals = [], [], []
    for rec in records:
        if hasattr(rec, "lam"):
            lam, val, q = rec.lam, rec.s, getattr(rec, "quality", 0.0)
        else:
            lam, val = rec[0], rec[1]
            q = rec[2] if len(rec) > 2 else 0.0
        if lam == 0.0:
            continue
        lams.append(float(lam))
        vals.append(complex(val))
        quals.append(float(q) if np.isfinite(q) else 0.0)
    return np.array(lams), np.array(vals), np.array(quals)


def _amplitude_at_slope(lams, vals, weights, p: float) -> tuple[complex, complex, float]:
    """Complex LS of vals = c lam^p + d lam^(p-1); returns (c, d, rms residual)."""
    X = np.stack([lams ** p, lams ** (p - 1.0)], axis=1).astype(complex)
    Wm = np.sqrt(weights)[:, None]
    sol, *_ = np.linalg.lstsq(Wm * X, np.sqrt(weights) * vals, rcond=None)
    res = X @ sol - vals
    scale = np.sqrt(np.mean(np.abs(vals) ** 2))
    rms = float(np.sqrt(np.mean(weights * np.abs(res) ** 2) / np.mean(weights)) / scale)
    return complex(sol[0]), complex(sol[1]), rms


def fit_power_law(records, expected_order: Optional[float] = None) -> FitResult:
    """Weighted log-log fit of mode differences, with a 1/lam correction term.

    The free-slope fit is reported in ``slope``; if ``expected_order`` is
    given the amplitude is re-fit at that fixed slope (the constrained
    amplitude is what recovery uses).
    """
    lams, vals, quals = _records_to_arrays(records)
    if len(lams) < 5:
        raise PreconditionError("need at least 5 nonzero modes for a power-law fit")
    if lams.max() / lams.min() < 4.0:
        raise PreconditionError("insufficient dynamic range: need a frequency ratio >= 4")
    mags = np.abs(vals)
    if not np.any(mags > 0):
        raise ConvergenceError("no signal: all mode differences vanish")
    # high modes weighted up; capped where solver quality degrades
    weights = 1.0 / (quals + 1.0 / lams)

    logl, logm = np.log(lams[mags > 0]), np.log(mags[mags > 0])
    w = weights[mags > 0]
    p0 = np.polyfit(logl, logm, 1, w=np.sqrt(w))[0]

    def objective(p):
        return _amplitude_at_slope(lams, vals, weights, p)[2]

    bracket = minimize_scalar(objective, bounds=(p0 - 1.0, p0 + 1.0), method="bounded",
                              options={"xatol": 1e-6})
    slope = float(bracket.x)
    c, d, rms = _amplitude_at_slope(lams, vals, weights, slope)

    if expected_order is not None:
        c, d, rms = _amplitude_at_slope(lams, vals, weights, float(expected_order))
    return FitResult(slope=slope, coefficient=c, residual=rms,
                     modes_used=tuple(lams.tolist()),
                     reliable=rms <= _RESIDUAL_RELIABLE,
                     meta={"subleading": d, "free_slope": slope})


def detect_order(records, sp: SpectralPoint) -> tuple[int, float]:
    """Perturbation order from the fitted slope: k = round(2 Re zeta - n - slope)."""
    fit = fit_power_law(records)
    k_real = 2 * sp.zeta.real - sp.n - fit.slope
    k = int(round(k_real))
    gap = abs(k - k_real)
    if gap > 0.25:
        raise GateError(f"ambiguous order: slope {fit.slope:.3f} gives k = {k_real:.3f}")
    if k < 1:
        raise GateError(f"detected order {k} below 1; not a valid jet order")
    return k, gap


@dataclass(frozen=True)
class RecoveredJet:
    k: int
    H_hat: np.ndarray
    scalar_hat: complex
    L_hat: np.ndarray
    W_hat: complex
    conditioning: float
    consistency: float
    assumption: str


def _sym_basis(n: int) -> list[np.ndarray]:
    out = []
    for i in range(n):
        for jj in range(i, n):
            E = np.zeros((n, n))
            E[i, jj] = E[jj, i] = 1.0
            out.append(E)
    return out


def recover_jet(amplitudes: dict, k: int, sp: SpectralPoint, h0: np.ndarray,
                assumption: str = "W_zero",
                gate_value: Optional[complex] = None) -> RecoveredJet:
    """Least-squares jet from per-direction symbol amplitudes.

    ``amplitudes`` maps covector tuples to complex amplitudes, already reduced
    to the homogeneous coefficient (value / |xi|-power handled here).  Under
    W_zero the scalar slot is eliminated by substitution T = trace(h0^{-1}L),
    which is exactly the reduction whose invertibility the solvability
    determinant guarantees; the reported consistency is the relative fit
    residual.  Under L_zero the only unknown is W.
    """
    if assumption not in ("L_zero", "W_zero", "joint"):
        raise PreconditionError(f"unknown assumption {assumption!r}")
    h0 = np.asarray(h0, dtype=float)
    n = sp.n
    ac = a_coeffs(k, sp)
    h0inv = np.linalg.inv(h0)

    dirs = [np.asarray(d, dtype=float) for d in amplitudes]
    vals = np.array([complex(amplitudes[d]) for d in amplitudes])
    needed = {"L_zero": 1, "W_zero": n * (n + 1) // 2, "joint": n * (n + 1) // 2 + 1}
    if len(dirs) < needed[assumption]:
        raise PreconditionError(f"need at least {needed[assumption]} directions "
                                f"for {assumption} recovery")

    if assumption == "W_zero":
        gate = solvability_determinant(k, sp) if gate_value is None else gate_value
        if abs(gate) < 1e-10:
            raise GateError("solvability determinant vanishes; recovery would be unstable")

    basis = _sym_basis(n)
    rows = []
    for xi in dirs:
        norm2 = float(xi @ h0inv @ xi)
        if norm2 <= 0:
            raise PreconditionError("directions must be nonzero")
        powk = norm2 ** ((2 * sp.zeta - n - k) / 2.0)
        row = []
        if assumption != "L_zero":
            for E in basis:
                # contribution of the H-entry E: anisotropic term, and under
                # W_zero also the trace term with T = trace(E h0)
                coeff = ac.A1 * (xi @ E @ xi) * norm2 ** ((2 * sp.zeta - n - k - 2) / 2.0)
                if assumption == "W_zero":
                    coeff += ac.A2 * (-0.25 * k * (n - k)) * np.trace(E @ h0) * powk
                row.append(coeff)
        if assumption != "W_zero":
            row.append(ac.A2 * powk)
        rows.append(row)
    X = np.array(rows, dtype=complex)

    # real unknowns for H entries, complex scalar split into re/im
    m_h = len(basis) if assumption != "L_zero" else 0
    Xr_cols, col_is_h = [], []
    for c in range(X.shape[1]):
        if c < m_h:
            Xr_cols.append(X[:, c])
            col_is_h.append(True)
        else:
            Xr_cols.append(X[:, c])
            col_is_h.append(False)
            Xr_cols.append(1j * X[:, c])
            col_is_h.append(False)
    A = np.stack(Xr_cols, axis=1)
    Areal = np.concatenate([A.real, A.imag], axis=0)
    b = np.concatenate([vals.real, vals.imag])
    sol, _, rank, svals = np.linalg.lstsq(Areal, b, rcond=None)
    if rank < Areal.shape[1]:
        raise GateError("rank-deficient design matrix; directions not in general position")
    conditioning = float(svals.min())

    resid = Areal @ sol - b
    scale = np.linalg.norm(b)
    consistency = float(np.linalg.norm(resid) / scale) if scale > 0 else 0.0

    H = np.zeros((n, n))
    idx = 0
    if assumption != "L_zero":
        for E, v in zip(basis, sol[:m_h]):
            H += v * E
        idx = m_h
    if assumption == "W_zero":
        scalar = complex(-0.25 * k * (n - k) * np.trace(h0inv @ (h0 @ H @ h0)))
        W_hat = 0.0 + 0.0j
    elif assumption == "L_zero":
        scalar = complex(sol[idx], sol[idx + 1])
        W_hat = scalar
    else:
        scalar = complex(sol[idx], sol[idx + 1])
        W_hat = complex("nan")

    L_hat = h0 @ H @ h0
    return RecoveredJet(k=k, H_hat=H, scalar_hat=scalar, L_hat=L_hat, W_hat=W_hat,
                        conditioning=conditioning, consistency=consistency,
                        assumption=assumption)


# ---------------------------------------------------------------------------
# calibration and direction bookkeeping


def calibration_factor(sp: SpectralPoint, bm: BoundaryMetric, k: int,
                       modes: Sequence, h: float = 1e-4, rtol: float = 1e-11) -> complex:
    """Ratio between engine eigenvalue differences and symbol predictions.

    Measured against a unit potential jet at order k: the engine's
    ds/d eps over the given modes, constrained-fit at the expected order and
    divided by A2.  The same factor applies to all jets at this (k, zeta).
    """
    pj = PerturbationJet(k=k, L=np.zeros((bm.n, bm.n)), W=1.0)
    fam = family_jet(bm, pj, [-h, 0.0, h], sp)
    recs = []
    for mode in modes:
        d = eps_derivative(fam, mode, rtol=rtol)
        lam = math.sqrt(float(np.asarray(mode, float) @
                              np.linalg.solve(bm.h0, np.asarray(mode, float))))
        recs.append((lam, d))
    fit = fit_power_law(recs, expected_order=order_bookkeeping(k, sp))
    return fit.coefficient / a_coeffs(k, sp).A2


def directional_amplitudes(records_by_direction: dict, k: int, sp: SpectralPoint,
                           h0: np.ndarray, calibration: complex = 1.0) -> dict:
    """Constrained power-law amplitude per direction, calibration divided out.

    ``records_by_direction`` maps a covector tuple to (lam, diff[, quality])
    records along that ray.  The returned amplitudes are normalized so that
    amp(d) multiplies |d|-homogeneous symbol values directly: the fit is done
    in lam = |m d|_{h0} and the amplitude rescaled to the unit of d.
    """
    expected = order_bookkeeping(k, sp)
    out = {}
    h0 = np.asarray(h0, dtype=float)
    for d, recs in records_by_direction.items():
        fit = fit_power_law(recs, expected_order=expected)
        xi = np.asarray(d, dtype=float)
        norm = math.sqrt(float(xi @ np.linalg.solve(h0, xi)))
        # amplitude c multiplies lam^expected; symbol at xi carries |xi|^expected
        out[d] = fit.coefficient * norm ** expected / calibration
    return out


# ---------------------------------------------------------------------------
# layer stripping


@dataclass(frozen=True)
class StripRound:
    k: int
    gap: float
    jet: RecoveredJet
    residual_slope: float
    signal: float


def layer_strip(data: dict, synthesize: Callable[[list], dict], sp: SpectralPoint,
                h0: np.ndarray, K_max: int, calibration: complex,
                assumption: str = "W_zero", signal_floor: float = 1e-9,
                ) -> list[StripRound]:
    """Recover jets order by order, re-simulating the reference each round.

    ``data`` maps modes to measured eigenvalues; ``synthesize`` maps a list of
    PerturbationJet to the same kind of dictionary.  Each round recovers one
    order, appends the recovered jet to the reference model, and requires the
    residual order to increase strictly.  Re-simulation (rather than
    first-order subtraction) is what keeps quadratic effects of earlier
    recovered jets out of later rounds.
    """
    h0 = np.asarray(h0, dtype=float)
    n = sp.n
    recovered: list[PerturbationJet] = []
    rounds: list[StripRound] = []
    last_k = 0
    for _ in range(K_max):
        ref = synthesize(recovered)
        diffs = {m: data[m] - ref[m] for m in data}

        by_dir: dict = {}
        for m, dv in diffs.items():
            mi = np.asarray(m, dtype=int)
            g = math.gcd(*[abs(int(v)) for v in mi]) if n > 1 else abs(int(mi[0]))
            d = tuple((mi // g).tolist()) if g > 0 else tuple(mi.tolist())
            lam = math.sqrt(float(mi @ np.linalg.solve(h0, mi.astype(float))))
            by_dir.setdefault(d, []).append((lam, dv))

        signal = max(abs(v) for v in diffs.values())
        if signal < signal_floor:
            break

        all_recs = [r for recs in by_dir.values() for r in recs]
        try:
            k, gap = detect_order(all_recs, sp)
        except (GateError, ConvergenceError):
            if rounds:
                break  # residual no longer carries a clean order; stripping done
            raise
        if k <= last_k:
            raise GateError(f"order stagnation: round order {k} did not increase past {last_k}")
        if k > K_max:
            break

        amps = directional_amplitudes(by_dir, k, sp, h0, calibration)
        jet = recover_jet(amps, k, sp, h0, assumption=assumption)
        recovered.append(PerturbationJet(k=k, L=jet.L_hat, W=float(jet.W_hat.real)))

        ref2 = synthesize(recovered)
        resid = [(math.sqrt(float(np.asarray(m, float) @ np.linalg.solve(h0, np.asarray(m, float)))),
                  data[m] - ref2[m]) for m in data]
        try:
            resid_fit = fit_power_law(resid)
            resid_slope = resid_fit.slope
        except ConvergenceError:
            resid_slope = -math.inf
        rounds.append(StripRound(k=k, gap=gap, jet=jet, residual_slope=resid_slope,
                                 signal=signal))
        expected_now = order_bookkeeping(k, sp)
        if resid_slope > expected_now - 0.5 and resid_slope != -math.inf:
            raise GateError(
                f"residual order failed to increase: slope {resid_slope:.2f} after order {k}")
        last_k = k
    return rounds
