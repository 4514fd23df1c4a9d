"""Critical line of the Potts/random-cluster model on the d-regular tree.

For 0 < B < B_+(d,q) the critical edge weight is

    w_c(B) = ell_{q,d}((q-1) e^{-B}),   ell_{q,d}(x) = (x^{2/d} - 1) / (1 - x^{2/d}/(q-1))

and B_+ is the unique positive solution of
(1 + w_c)(1 + w_c/(q-1)) = (d/(d-2))^2, beyond which the free and wired
fixed points merge.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from . import bp
from .errors import DomainError, OutsideCriticalWindow, SolverFailure
from .params import ModelParams

TOL_CRIT = 1e-9  # Psi-equality tolerance for declaring criticality


class Regime(Enum):
    UNIQUENESS = "Uniqueness"
    DISORDERED = "Disordered"
    ORDERED = "Ordered"
    CRITICAL = "Critical"


def ell(d: int, q: float, x: float) -> float:
    t = x ** (2.0 / d)
    return (t - 1.0) / (1.0 - t / (q - 1.0))


def _bplus_residual(d: int, q: float, B: float) -> float:
    w = ell(d, q, (q - 1.0) * np.exp(-B))
    return (1.0 + w) * (1.0 + w / (q - 1.0)) - (d / (d - 2.0)) ** 2


def b_plus(d: int, q: float) -> float:
    """Field strength at which the nonuniqueness window closes."""
    if d < 3 or not q > 2:
        raise DomainError("need d >= 3 and q > 2")
    lo, hi = 1e-12, 50.0
    if not (_bplus_residual(d, q, lo) > 0.0 > _bplus_residual(d, q, hi)):
        raise SolverFailure(f"no bracket for B_+ in [{lo}, {hi}] at d={d}, q={q}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _bplus_residual(d, q, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def critical_line(d: int, q: float, B: float, allow_boundary: bool = False):
    """(w_c, beta_crit) for 0 < B < B_+.

    B = 0 is only a boundary limit of the critical line; it is accepted
    behind the allow_boundary flag and evaluated as the B -> 0+ limit.
    """
    if B < 0 or (B == 0 and not allow_boundary):
        raise DomainError("critical_line needs B > 0 (B=0 only via allow_boundary)")
    if B >= b_plus(d, q):
        raise OutsideCriticalWindow(f"B={B} >= B_+({d},{q})")
    w_c = ell(d, q, (q - 1.0) * np.exp(-B))
    return w_c, float(np.log1p(w_c))


def is_critical(params: ModelParams, tol: float = TOL_CRIT) -> bool:
    """Whether (beta, B) lies on the critical line, up to tol in w."""
    try:
        w_c, _ = critical_line(params.d, params.q, params.B)
    except (DomainError, OutsideCriticalWindow):
        return False
    return abs(params.w - w_c) <= tol * (1.0 + w_c)


@dataclass
class PhasePoint:
    params: ModelParams
    nu_free: bp.ColorLaw
    nu_wired: bp.ColorLaw
    psi_free_val: float
    psi_wired_val: float
    regime: Regime
    w_c: Optional[float] = None
    beta_crit: Optional[float] = None
    b_plus: Optional[float] = None
    diagnostics: Optional[dict] = None


def _bare_regime(params: ModelParams, tol: float, tol_crit: float) -> Regime:
    nf, nw = bp.bp_fixed_points(params)
    if np.max(np.abs(nf.probs - nw.probs)) <= tol:
        return Regime.UNIQUENESS
    dpsi = bp.bethe_functional(params, nf) - bp.bethe_functional(params, nw)
    if abs(dpsi) <= tol_crit:
        return Regime.CRITICAL
    return Regime.DISORDERED if dpsi > 0 else Regime.ORDERED


def _probe_side(params: ModelParams, sign: float, tol: float, tol_crit: float) -> dict:
    # The nonuniqueness window around beta_crit can be very narrow, so walk
    # the offset inward until the probe lands where the fixed points differ.
    db = 5e-2
    for _ in range(24):
        r = _bare_regime(params.with_beta(params.beta + sign * db), tol, tol_crit)
        if r is not Regime.UNIQUENESS:
            return {"regime": r.value, "offset": sign * db}
        db *= 0.5
    return {"regime": Regime.UNIQUENESS.value, "offset": sign * db}


def classify_regime(params: ModelParams, tol: float = 1e-10,
                    tol_crit: float = TOL_CRIT) -> PhasePoint:
    """Locate (beta, B) in the phase diagram.

    Uniqueness when the free and wired BP fixed points coincide; otherwise
    the sign of Psi(nu_free) - Psi(nu_wired) separates the disordered and
    ordered regimes, with Critical declared inside tol_crit of equality.
    A Critical verdict is accompanied by classifications of the two
    one-sided neighbor points as diagnostics.
    """
    nu_free, nu_wired = bp.bp_fixed_points(params)
    psi_f = bp.bethe_functional(params, nu_free)
    psi_w = bp.bethe_functional(params, nu_wired)
    if np.max(np.abs(nu_free.probs - nu_wired.probs)) <= tol:
        regime = Regime.UNIQUENESS
    elif abs(psi_f - psi_w) <= tol_crit:
        regime = Regime.CRITICAL
    elif psi_f > psi_w:
        regime = Regime.DISORDERED
    else:
        regime = Regime.ORDERED

    w_c = beta_crit = bp_val = diagnostics = None
    try:
        bp_val = b_plus(params.d, params.q)
        if 0 < params.B < bp_val:
            w_c, beta_crit = critical_line(params.d, params.q, params.B)
    except SolverFailure:
        pass
    if regime is Regime.CRITICAL:
        diagnostics = {
            "below": _probe_side(params, -1.0, tol, tol_crit),
            "above": _probe_side(params, +1.0, tol, tol_crit),
        }
    return PhasePoint(params, nu_free, nu_wired, psi_f, psi_w, regime,
                      w_c, beta_crit, bp_val, diagnostics)
