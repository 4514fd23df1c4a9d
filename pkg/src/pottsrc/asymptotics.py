"""Asymptotics of the free/wired partition-function ratio at criticality.

Everything here lives at (or just off) a critical point: the spectrum of the
fixed-point overlap operator, the cycle weights theta_k and delta_k with
their certified infinite products, the Gaussian prefactor ratio Gamma, the
cavity corrections from degree-perturbed vertices, and the mixture-tuning
recipe that combines all of them.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .bp import ColorLaw, bethe_functional
from .critical import is_critical
from .errors import (ConvergenceFailure, DivergentRegime, DomainError,
                     NumericalFailure, OutsideCriticalLine, PlanFailure,
                     SolverFailure)
from .params import ModelParams

# Certified truncation target for the infinite products over cycle lengths.
TAIL_TARGET = 1e-12


# ------------------------------------------------------------- scalar core

def _scalar_map(params: ModelParams, x: float) -> float:
    """The BP recursion in ratio form x = nu(1)/nu(2)."""
    eb = math.exp(params.beta)
    q = params.q
    return math.exp(params.B) * ((eb * x + q - 1.0) /
                                 (x + eb + q - 2.0)) ** (params.d - 1)


def _point_core(params: ModelParams, x: float):
    """Cavity fields A1/A2, pair normalizer D and root weight at ratio x.

    All quantities are computed for the normalized message
    nu = (x, 1, ..., 1) / (x + q - 1).
    """
    q, d = params.q, params.d
    eb = math.exp(params.beta)
    s0 = x + q - 1.0
    a1 = (eb * x + q - 1.0) / s0
    a2 = (x + eb + q - 2.0) / s0
    dd = (eb * (x * x + q - 1.0) + 2.0 * x * (q - 1.0)
          + (q - 1.0) * (q - 2.0)) / s0 ** 2
    vertex = math.exp(params.B) * a1 ** d + (q - 1.0) * a2 ** d
    s_root = math.exp(params.B) * a1 ** d / vertex
    return a1, a2, dd, s_root


def x_roots(params: ModelParams, tol: float = 1e-13,
            max_iter: int = 10 ** 6) -> Tuple[float, float]:
    """Smallest and largest positive fixed points of the ratio recursion.

    Iterates the monotone map from below (x=1) and from above the sup of
    its range, then polishes each limit with a bracketed bisection.  At a
    tangency (the closure of the non-uniqueness region) the sign change
    can vanish; the iterated value is then accepted if its residual is
    small, otherwise SolverFailure is raised.
    """
    sup = math.exp(params.B) * math.exp(params.beta * (params.d - 1)) + 1.0

    def settle(x0: float) -> float:
        x = x0
        for _ in range(max_iter):
            nx = _scalar_map(params, x)
            if abs(nx - x) <= 1e-12 * (1.0 + x):
                x = nx
                break
            x = nx
        # bisection polish on a local bracket, widened if the slow
        # iteration stopped short of the root
        g = lambda t: _scalar_map(params, t) - t
        width = 1e-9
        for _ in range(30):
            lo, hi = x * (1.0 - width), x * (1.0 + width)
            if g(lo) * g(hi) < 0.0:
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    if g(lo) * g(mid) <= 0.0:
                        hi = mid
                    else:
                        lo = mid
                return 0.5 * (lo + hi)
            width *= 4.0
            if width > 0.5:
                break
        if abs(g(x)) <= 1e-9 * (1.0 + x):
            return x
        raise SolverFailure(f"no bracket around ratio fixed point near {x}")

    x_free = settle(1.0)
    x_wired = settle(sup)
    for x in (x_free, x_wired):
        if abs(_scalar_map(params, x) - x) > 1e-9 * (1.0 + x):
            raise SolverFailure("ratio fixed point failed residual check")
    return x_free, x_wired


# -------------------------------------------------- overlap operator spectra

def b_interaction(params: ModelParams) -> np.ndarray:
    """Field-tilted interaction matrix exp(beta*delta_ij + (B/d)(1_i + 1_j))."""
    q = params.qi
    i = np.arange(q)
    delta = (i[:, None] == i[None, :]).astype(float)
    tilt = (params.B / params.d) * ((i[:, None] == 0).astype(float)
                                    + (i[None, :] == 0).astype(float))
    return np.exp(params.beta * delta + tilt)


@dataclass(frozen=True)
class QMatrixData:
    """Overlap operator and its spectrum at one fixed point."""
    which: str
    x_root: float
    b_matrix: np.ndarray
    q_matrix: np.ndarray
    eigenvalues: np.ndarray          # closed forms, descending
    eigenvalues_numeric: np.ndarray  # symmetric eigensolver cross-check


def q_matrix_eigs(params: ModelParams, which: str = "free") -> QMatrixData:
    """Spectrum of the symmetrized overlap operator at the free or wired
    fixed point.

    The operator is Q_ij = e^{beta delta_ij} sqrt(nu_i nu_j) /
    sqrt(A_i A_j) built from the bare Potts interaction and the message
    fixed point; the field enters through the fixed point itself.  Its
    top eigenvalue is exactly 1 with eigenvector sqrt(nu_i A_i); the
    remaining eigenvalues have the closed forms

        lambda_2 = e^b x/(e^b x + q - 1) - x/(x + e^b + q - 2),
        lambda_3 = ... = lambda_q = (e^b - 1)/(x + e^b + q - 2).

    Both the closed forms and a numeric eigendecomposition are returned.
    """
    if which not in ("free", "wired"):
        raise DomainError(f"which must be 'free' or 'wired', got {which!r}")
    q = params.qi
    xf, xw = x_roots(params)
    x = xf if which == "free" else xw

    nu = np.full(q, 1.0 / (x + q - 1.0))
    nu[0] = x / (x + q - 1.0)
    eb = math.exp(params.beta)
    bare = np.where(np.eye(q, dtype=bool), eb, 1.0)
    arr = bare @ nu
    qm = bare * np.sqrt(np.outer(nu, nu)) / np.sqrt(np.outer(arr, arr))

    lam2 = eb * x / (eb * x + q - 1.0) - x / (x + eb + q - 2.0)
    lam3 = (eb - 1.0) / (x + eb + q - 2.0)
    closed = np.concatenate(([1.0, lam2], np.full(q - 2, lam3)))
    numeric = np.sort(np.linalg.eigvalsh(qm))[::-1]
    return QMatrixData(which, x, b_interaction(params), qm, closed, numeric)


# ----------------------------------------------- cycle weights and products

@dataclass(frozen=True)
class SscData:
    """Cycle-weight data for small-subgraph conditioning at one parameter
    point: spectra, theta/delta tables, certified products, and (optionally)
    the Gaussian prefactor ratio."""
    params: ModelParams
    x_root_free: float
    x_root_wired: float
    b_matrix: np.ndarray
    q_free: np.ndarray
    q_wired: np.ndarray
    eigen_free: np.ndarray
    eigen_wired: np.ndarray
    theta: Dict[int, float]
    delta_free: Dict[int, float]
    delta_wired: Dict[int, float]
    prod_free: float
    prod_wired: float
    tail_free: float
    tail_wired: float
    diff_sum: float
    upsilon1_free: Optional[float] = None
    upsilon1_wired: Optional[float] = None
    gamma: Optional[float] = None


def _delta_k(q: int, lam2: float, lam3: float, k: int) -> float:
    return lam2 ** k + (q - 2) * lam3 ** k


def _product_sum(d: int, q: int, lam2: float, lam3: float) -> Tuple[float, float]:
    """sum_{k>=3} theta_k delta_k with a certified geometric tail bound.

    Terms are accumulated as powers of rho = (d-1)*lambda so theta_k never
    overflows; the loop stops once the remaining tail is below TAIL_TARGET.
    """
    rho2, rho3 = (d - 1) * lam2, (d - 1) * lam3
    total, k = 0.0, 3
    p2, p3 = rho2 ** 3, rho3 ** 3
    while True:
        total += (p2 + (q - 2) * p3) / (2.0 * k)
        tail = (q - 1) * rho2 ** (k + 1) / (2.0 * (k + 1) * (1.0 - rho2))
        if tail < TAIL_TARGET:
            return total, tail
        k += 1
        if k > 10 ** 6:
            raise ConvergenceFailure(
                "theta*delta sum did not certify; parameters are too close "
                "to the spinodal", residual=tail, iterations=k)
        p2 *= rho2
        p3 *= rho3


def _diff_sum(d: int, q: int, l2f: float, l3f: float,
              l2w: float, l3w: float) -> float:
    """sum_{k>=3} theta_k (delta_k^free - delta_k^wired), certified."""
    rho_hi = (d - 1) * max(l2f, l2w)
    rho3 = (d - 1) * max(l3f, l3w)
    total, k = 0.0, 3
    while True:
        th = (d - 1) ** k / (2.0 * k) if k < 600 else None
        df = _delta_k(q, l2f, l3f, k)
        dw = _delta_k(q, l2w, l3w, k)
        if th is not None:
            total += th * (df - dw)
        else:
            # accumulate in rho form for very long tails
            total += ((((d - 1) * l2f) ** k - ((d - 1) * l2w) ** k)
                      + (q - 2) * (((d - 1) * l3f) ** k
                                   - ((d - 1) * l3w) ** k)) / (2.0 * k)
        bound = ((q - 1) * rho3 ** (k + 1) / (2.0 * (k + 1) * (1.0 - rho3))
                 + rho_hi ** (k + 1) * abs(l2f - l2w) * (k + 1))
        if k >= 10 and bound < TAIL_TARGET:
            return total
        k += 1
        if k > 10 ** 6:
            raise ConvergenceFailure("difference sum did not certify",
                                     residual=bound, iterations=k)


def ssc_products(params: ModelParams, K_tail: int = 200,
                 with_gamma: bool = True) -> SscData:
    """Assemble the cycle-weight data at a parameter point.

    theta/delta tables are stored for k = 3..K_tail; the products and the
    free-wired difference sum are extended adaptively past K_tail until the
    geometric tail bound drops below 1e-12, so the reported limits carry a
    certified truncation error.  Raises DivergentRegime when
    (d-1)*lambda_2 >= 1 and the products do not converge.
    """
    if not 3 <= K_tail <= 500:
        raise DomainError(f"K_tail must lie in [3, 500], got {K_tail}")
    d, q = params.d, params.qi
    qf = q_matrix_eigs(params, "free")
    qw = q_matrix_eigs(params, "wired")
    l2f, l3f = qf.eigenvalues[1], qf.eigenvalues[2]
    l2w, l3w = qw.eigenvalues[1], qw.eigenvalues[2]
    rho = (d - 1) * max(l2f, l2w)
    if rho >= 1.0:
        raise DivergentRegime(
            f"(d-1)*lambda_2 = {rho:.6f} >= 1: the cycle products diverge")

    theta, delta_f, delta_w = {}, {}, {}
    for k in range(3, K_tail + 1):
        try:
            theta[k] = (d - 1) ** k / (2.0 * k)
        except OverflowError:
            theta[k] = math.inf
        delta_f[k] = _delta_k(q, l2f, l3f, k)
        delta_w[k] = _delta_k(q, l2w, l3w, k)

    sum_f, tail_f = _product_sum(d, q, l2f, l3f)
    sum_w, tail_w = _product_sum(d, q, l2w, l3w)
    diff = _diff_sum(d, q, l2f, l3f, l2w, l3w)

    ups_f = ups_w = gam = None
    if with_gamma:
        pref = gamma_prefactor(params)
        ups_f, ups_w, gam = pref.upsilon1_free, pref.upsilon1_wired, pref.gamma

    return SscData(params=params, x_root_free=qf.x_root, x_root_wired=qw.x_root,
                   b_matrix=qf.b_matrix, q_free=qf.q_matrix, q_wired=qw.q_matrix,
                   eigen_free=qf.eigenvalues, eigen_wired=qw.eigenvalues,
                   theta=theta, delta_free=delta_f, delta_wired=delta_w,
                   prod_free=math.exp(-sum_f), prod_wired=math.exp(-sum_w),
                   tail_free=tail_f, tail_wired=tail_w, diff_sum=diff,
                   upsilon1_free=ups_f, upsilon1_wired=ups_w, gamma=gam)


def second_moment_identity(params: ModelParams,
                           which: str = "free") -> Tuple[float, float]:
    """Two routes to sum_k theta_k delta_k^2.

    The series route accumulates the squared cycle weights; the closed route
    evaluates -1/2 sum_{i,j>=2} log(1 - (d-1) lambda_i lambda_j).  Both are
    returned so their agreement can be checked externally.
    """
    d, q = params.d, params.qi
    qd = q_matrix_eigs(params, which)
    lam2, lam3 = qd.eigenvalues[1], qd.eigenvalues[2]
    rho_sq = (d - 1) * lam2 * lam2
    total, k = 0.0, 1
    while True:
        dk = _delta_k(q, lam2, lam3, k)
        total += dk * dk * ((d - 1) ** k / (2.0 * k)
                            if k < 600 else math.inf)
        tail = ((q - 1) ** 2 * rho_sq ** (k + 1)
                / (2.0 * (k + 1) * (1.0 - rho_sq)))
        if tail < TAIL_TARGET:
            break
        k += 1
    lams = np.concatenate(([lam2], np.full(q - 2, lam3)))
    closed = -0.5 * float(np.log1p(-(d - 1)
                                   * np.outer(lams, lams)).sum())
    return total, closed


# --------------------------------------------------- Gaussian prefactor ratio

def _scaled_coupling(bm: np.ndarray, alpha: np.ndarray,
                     tol: float = 1e-13, max_iter: int = 200000) -> np.ndarray:
    """Diagonal scaling u with u_i (B u)_i = alpha_i.

    A damped fixed-point iteration takes u into the Newton basin; a few
    Newton steps then push the residual to machine precision, which the
    finite-difference Hessian check downstream depends on.
    """
    u = np.sqrt(alpha)
    for _ in range(max_iter):
        nu_ = alpha / (bm @ u)
        step = np.max(np.abs(nu_ - u))
        u = 0.5 * (u + nu_)
        if step < tol:
            break
    for _ in range(8):
        bu = bm @ u
        f = u * bu - alpha
        if np.max(np.abs(f)) < 1e-16:
            break
        jac = np.diag(bu) + u[:, None] * bm
        u = u - np.linalg.solve(jac, f)
    resid = np.max(np.abs(u * (bm @ u) - alpha))
    if resid > 1e-12:
        raise ConvergenceFailure("pair-coupling scaling did not converge",
                                 residual=float(resid))
    return u


def upsilon1(params: ModelParams, alpha: np.ndarray) -> Tuple[float, np.ndarray]:
    """Annealed one-point exponent at color profile alpha.

    Maximizes the pair term over symmetric couplings x with row sums alpha;
    the maximizer is x_ij = B_ij u_i u_j for the diagonal scaling u, which
    is also returned.
    """
    alpha = np.asarray(alpha, dtype=float)
    q = params.qi
    if alpha.shape != (q,) or (alpha <= 0).any() or abs(alpha.sum() - 1.0) > 1e-9:
        raise DomainError("alpha must be a strictly positive color profile")
    bm = b_interaction(params)
    u = _scaled_coupling(bm, alpha)
    x = bm * np.outer(u, u)
    pair = float((x * (np.log(bm) - np.log(x))).sum())
    ent = float((alpha * np.log(alpha)).sum())
    return (params.d - 1) * ent + 0.5 * params.d * pair, u


def upsilon2(params: ModelParams, alpha: np.ndarray) -> float:
    """Annealed two-point exponent, evaluated at its closed-form maximizers.

    Independent of upsilon1 up to the shared scaling u: the 4-index sums are
    carried out literally, which is what makes the doubling identity a real
    cross-check.
    """
    alpha = np.asarray(alpha, dtype=float)
    bm = b_interaction(params)
    u = _scaled_coupling(bm, alpha)
    x = bm * np.outer(u, u)
    gam = np.outer(alpha, alpha)
    y = np.einsum("ij,kl->ikjl", x, x)
    logbb = np.log(bm)[:, None, :, None] + np.log(bm)[None, :, None, :]
    pair = float((y * (logbb - np.log(y))).sum())
    ent = float((gam * np.log(gam)).sum())
    return (params.d - 1) * ent + 0.5 * params.d * pair


def _upsilon_hessian_sym(params: ModelParams, s_root: float):
    """Analytic Hessian data of upsilon1 at the symmetric profile
    (s, r, ..., r), reduced to simplex coordinates.

    The full-space Hessian is (d-1) diag(1/alpha) - d (diag(alpha) + X)^{-1}
    with X the maximizing coupling; the first coordinate is eliminated
    against the simplex constraint.  By color symmetry the reduced Hessian
    is D2 on the diagonal and O2 off it, with eigenvalues D2 + (q-2) O2
    (once) and D2 - O2 (q-2 times).
    """
    q, d = params.qi, params.d
    r = (1.0 - s_root) / (q - 1)
    alpha = np.full(q, r)
    alpha[0] = s_root
    bm = b_interaction(params)
    u = _scaled_coupling(bm, alpha)
    x = bm * np.outer(u, u)
    h_full = ((d - 1) * np.diag(1.0 / alpha)
              - d * np.linalg.inv(np.diag(alpha) + x))
    d2 = h_full[1, 1] - 2.0 * h_full[0, 1] + h_full[0, 0]
    o2 = h_full[1, 2] - h_full[0, 1] - h_full[0, 2] + h_full[0, 0]
    return d2, o2


def _upsilon_hessian_fd(params: ModelParams, s_root: float, h: float):
    """Central-difference Hessian entries, Richardson-extrapolated at h, h/2."""
    q = params.qi
    r = (1.0 - s_root) / (q - 1)
    base = np.full(q, r)
    base[0] = s_root

    def f(d2, d3):
        al = base.copy()
        al[1] += d2
        al[2] += d3
        al[0] -= d2 + d3
        return upsilon1(params, al)[0]

    def at(step):
        f0 = f(0.0, 0.0)
        dd = (f(step, 0.0) - 2.0 * f0 + f(-step, 0.0)) / step ** 2
        oo = (f(step, step) - f(step, -step) - f(-step, step)
              + f(-step, -step)) / (4.0 * step ** 2)
        return dd, oo

    d_h, o_h = at(h)
    d_h2, o_h2 = at(h / 2.0)
    return (4.0 * d_h2 - d_h) / 3.0, (4.0 * o_h2 - o_h) / 3.0


@dataclass(frozen=True)
class GammaPrefactor:
    upsilon1_free: float
    upsilon1_wired: float
    gamma: float
    m_free: float
    m_wired: float
    det_negh_free: float
    det_negh_wired: float
    fd_rel_dev: float


def gamma_prefactor(params: ModelParams, fd_step: float = 1e-5,
                    crit_tol: float = 1e-9) -> GammaPrefactor:
    """Ratio of the Gaussian prefactors of E[Z_free] and E[Z_wired].

    At criticality the e^{n Upsilon_1} factors cancel (the exponents agree),
    leaving Gamma = M_free / M_wired with

        M = (prod_i nu_i * prod_{i>=2} (1 + lambda_i))^{-1/2} det(-H)^{-1/2},

    H the simplex-reduced Hessian of upsilon1 at the root profile.  The
    Hessian is computed analytically and cross-checked against Richardson-
    extrapolated central differences with step fd_step.
    """
    if not is_critical(params, tol=crit_tol):
        raise OutsideCriticalLine(
            "gamma_prefactor requires parameters on the critical line")
    q = params.qi
    out = {}
    fd_dev = 0.0
    for which in ("free", "wired"):
        qd = q_matrix_eigs(params, which)
        x = qd.x_root
        _, _, _, s_root = _point_core(params, x)
        r = (1.0 - s_root) / (q - 1)
        alpha = np.full(q, r)
        alpha[0] = s_root
        ups, u = upsilon1(params, alpha)

        # internal consistency: the exponent must equal the Bethe value and
        # the scaling maximizer must match its closed form from the message
        nu_msg = np.full(q, 1.0 / (x + q - 1.0))
        nu_msg[0] = x / (x + q - 1.0)
        psi = bethe_functional(params, ColorLaw(nu_msg))
        if abs(psi - ups) > 1e-8:
            raise NumericalFailure(
                f"upsilon1 and Bethe value disagree by {abs(psi - ups):.3e}")
        rho_t = nu_msg * np.exp(-(params.B / params.d)
                                * (np.arange(q) == 0))
        bm = qd.b_matrix
        dt = float(rho_t @ bm @ rho_t)
        xresid = np.max(np.abs(bm * np.outer(u, u)
                               - bm * np.outer(rho_t, rho_t) / dt))
        if xresid > 1e-8:
            raise NumericalFailure(
                f"coupling maximizer off its closed form by {xresid:.3e}")

        d2, o2 = _upsilon_hessian_sym(params, s_root)
        eig_big, eig_small = d2 + (q - 2) * o2, d2 - o2
        if eig_big >= 0.0 or eig_small >= 0.0:
            raise NumericalFailure("reduced Hessian is not negative definite")
        det_negh = (-eig_big) * (-eig_small) ** (q - 2)

        # the h = 1e-5 differences carry roundoff of order eps/h^2, so the
        # gate is on the entries (the determinant would amplify it q-fold)
        d2_fd, o2_fd = _upsilon_hessian_fd(params, s_root, fd_step)
        dev = max(abs(d2_fd - d2) / (1.0 + abs(d2)),
                  abs(o2_fd - o2) / (1.0 + abs(o2)))
        fd_dev = max(fd_dev, dev)
        if dev > 1e-3:
            raise NumericalFailure(
                f"finite-difference Hessian deviates by {dev:.2e}")

        lam2, lam3 = qd.eigenvalues[1], qd.eigenvalues[2]
        m_val = (s_root * r ** (q - 1) * (1.0 + lam2)
                 * (1.0 + lam3) ** (q - 2)) ** -0.5 * det_negh ** -0.5
        out[which] = (ups, m_val, det_negh)

    return GammaPrefactor(
        upsilon1_free=out["free"][0], upsilon1_wired=out["wired"][0],
        gamma=out["free"][1] / out["wired"][1],
        m_free=out["free"][1], m_wired=out["wired"][1],
        det_negh_free=out["free"][2], det_negh_wired=out["wired"][2],
        fd_rel_dev=fd_dev)


# ------------------------------------------------------- cavity corrections

def cavity_delta(params: ModelParams, which: str, d_star: int,
                 crit_tol: float = 1e-9) -> float:
    """Cavity weight Delta_{d*, which} of a degree-d* vertex.

    Delta_l = (e^B A1^l + (q-1) A2^l) / D^{l/2} evaluated at the free or
    wired fixed point; l = d recovers e^{Psi} so the free and wired values
    coincide on the critical line.
    """
    if which not in ("free", "wired"):
        raise DomainError(f"which must be 'free' or 'wired', got {which!r}")
    d = params.d
    if d_star not in (d - 1, d, d + 1):
        raise DomainError(f"d_star must be one of {d-1}, {d}, {d+1}")
    if not is_critical(params, tol=crit_tol):
        raise OutsideCriticalLine("cavity weights are defined on the "
                                  "critical line")
    xf, xw = x_roots(params)
    a1, a2, dd, _ = _point_core(params, xf if which == "free" else xw)
    c1, c2 = math.exp(params.B), params.q - 1.0
    return (c1 * a1 ** d_star + c2 * a2 ** d_star) / dd ** (d_star / 2.0)


def b6_chain(params: ModelParams, crit_tol: float = 1e-9) -> dict:
    """Cross-fixed-point comparison chain behind the cavity inequalities.

    With P = A1_f sqrt(D_w), Q = A2_f sqrt(D_w), R = A1_w sqrt(D_f),
    S = A2_w sqrt(D_f) and the common sum T = e^B P^d + (q-1) Q^d
    (= e^B R^d + (q-1) S^d on the critical line), the strict ordering

        0 < S^d < Q^d < T/(e^B + q - 1) < P^d < R^d < T/e^B

    must hold; a violation raises NumericalFailure.
    """
    if not is_critical(params, tol=crit_tol):
        raise OutsideCriticalLine("the comparison chain lives on the "
                                  "critical line")
    d = params.d
    xf, xw = x_roots(params)
    a1f, a2f, df, _ = _point_core(params, xf)
    a1w, a2w, dw, _ = _point_core(params, xw)
    c1, c2 = math.exp(params.B), params.q - 1.0
    p_ = a1f * math.sqrt(dw)
    q_ = a2f * math.sqrt(dw)
    r_ = a1w * math.sqrt(df)
    s_ = a2w * math.sqrt(df)
    t_free = c1 * p_ ** d + c2 * q_ ** d
    t_wired = c1 * r_ ** d + c2 * s_ ** d
    links = (0.0, s_ ** d, q_ ** d, t_free / (c1 + c2),
             p_ ** d, r_ ** d, t_free / c1)
    ok = all(a < b for a, b in zip(links, links[1:]))
    if not ok:
        raise NumericalFailure(f"comparison chain violated: {links}")
    return {"P": p_, "Q": q_, "R": r_, "S": s_, "T": t_free,
            "T_rel_dev": abs(t_free - t_wired) / t_free, "chain": links,
            "chain_ok": ok}


# ------------------------------------------------------------ ratio tuning

@dataclass(frozen=True)
class CavityPlan:
    """Recipe for steering the free/wired ratio to a target mixture."""
    d_star: int
    p: int
    K: int
    x: int
    target_gamma: float
    predicted_ratio: float
    delta_dm1_free: float
    delta_dm1_wired: float
    delta_dp1_free: float
    delta_dp1_wired: float


def predicted_ratio(ssc: SscData, cycles, plan: Optional[CavityPlan] = None) -> float:
    """Predicted E[Z_free]/E[Z_wired] for a graph with the given cycle counts.

    Gamma times the certified difference product, times one factor
    (1+delta_k^f)/(1+delta_k^w) per k-cycle present, times the cavity
    correction (Delta_{d*,f}/Delta_{d*,w})^p when a plan is supplied.
    """
    if ssc.gamma is None:
        raise DomainError("SscData was built without the prefactor; "
                          "rerun ssc_products with with_gamma=True")
    counts = dict(cycles.counts)
    if plan is not None and plan.K > 0 and max(counts, default=0) < plan.K:
        raise DomainError(f"cycle counts reach K={max(counts, default=0)} "
                          f"but the plan needs K={plan.K}")
    d, q = ssc.params.d, ssc.params.qi
    l2f, l3f = ssc.eigen_free[1], ssc.eigen_free[2]
    l2w, l3w = ssc.eigen_wired[1], ssc.eigen_wired[2]
    ratio = ssc.gamma * math.exp(-ssc.diff_sum)
    for k, xk in sorted(counts.items()):
        if xk:
            ratio *= ((1.0 + _delta_k(q, l2f, l3f, k))
                      / (1.0 + _delta_k(q, l2w, l3w, k))) ** xk
    if plan is not None and plan.p:
        if plan.d_star == d + 1:
            ratio *= (plan.delta_dp1_free / plan.delta_dp1_wired) ** plan.p
        else:
            ratio *= (plan.delta_dm1_free / plan.delta_dm1_wired) ** plan.p
    return ratio


def tune_mixture(params: ModelParams, alpha: float, n_slack: int) -> CavityPlan:
    """Construct a plan whose predicted ratio lands in the mixture bracket.

    Target gamma = alpha/(1-alpha).  The dominant tail of delta_k^f -
    delta_k^w fixes which side is heavier (ties at 1e-12 are refused); the
    cavity exponent p then pushes the base ratio across the target in even
    steps, and x sprinkled K-cycles climb back into
    [gamma, (1 + 1/n_slack) gamma).
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0,1), got {alpha}")
    if n_slack < 1:
        raise DomainError("n_slack must be a positive integer")
    target = alpha / (1.0 - alpha)
    hi = (1.0 + 1.0 / n_slack) * target

    ssc = ssc_products(params, with_gamma=True)
    d, q = params.d, params.qi
    l2f, l3f = ssc.eigen_free[1], ssc.eigen_free[2]
    l2w, l3w = ssc.eigen_wired[1], ssc.eigen_wired[2]
    # the lambda_2 values coincide on the critical line, so the tail sign
    # of delta^f - delta^w is carried by the subleading eigenvalue
    if abs(l3f - l3w) <= 1e-12:
        raise PlanFailure("free and wired spectra are numerically "
                          "indistinguishable; no tuning direction")
    free_heavy = l3f > l3w

    deltas = {ds: (cavity_delta(params, "free", ds),
                   cavity_delta(params, "wired", ds))
              for ds in (d - 1, d + 1)}
    d_star = d + 1 if free_heavy else d - 1
    mod = deltas[d_star][0] / deltas[d_star][1]

    base = ssc.gamma * math.exp(-ssc.diff_sum)
    p, ratio = 0, base
    if free_heavy:
        while ratio >= hi:
            p += 2
            ratio = base * mod ** p
    else:
        while ratio < target:
            p += 2
            ratio = base * mod ** p
    if p > 10 ** 6:
        raise PlanFailure("cavity exponent search did not terminate")

    x_count, k_cyc = 0, 0
    in_bracket = target <= ratio < hi
    if not in_bracket:
        k_cyc, cf = 3, None
        while True:
            cf = ((1.0 + _delta_k(q, l2f, l3f, k_cyc))
                  / (1.0 + _delta_k(q, l2w, l3w, k_cyc)))
            if free_heavy and 1.0 < cf < 1.0 + 1.0 / n_slack:
                break
            if not free_heavy and 1.0 / (1.0 + 1.0 / n_slack) < cf < 1.0:
                break
            k_cyc += 1
            if k_cyc > 1000:
                raise PlanFailure("no admissible cycle length below 1000")
        if free_heavy:
            while ratio < target:
                x_count += 1
                ratio *= cf
        else:
            while ratio >= hi:
                x_count += 1
                ratio *= cf
    if not target <= ratio < hi:
        raise PlanFailure(
            f"predicted ratio {ratio} escaped [{target}, {hi})")
    return CavityPlan(d_star=d_star, p=p, K=k_cyc, x=x_count,
                      target_gamma=target, predicted_ratio=ratio,
                      delta_dm1_free=deltas[d - 1][0],
                      delta_dm1_wired=deltas[d - 1][1],
                      delta_dp1_free=deltas[d + 1][0],
                      delta_dp1_wired=deltas[d + 1][1])
