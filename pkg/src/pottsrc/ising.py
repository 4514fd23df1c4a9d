"""Rank-2 reduction of the critical Potts model to a ferromagnetic Ising chain.

On the critical line the q-state interaction matrix, restricted to the
two-dimensional span that the BP fixed points actually occupy, matches an
Ising model with inverse temperature beta_star, slope k_coef and field
h_coef; on that line k_coef*d + h_coef = 0, so the reduced model is the
zero-field Ising model on the d-regular tree and its magnetization m(beta*)
controls the Potts root marginals.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SolverFailure
from .params import ModelParams


@dataclass(frozen=True)
class IsingReduction:
    beta_star: float
    k_coef: float
    h_coef: float
    beta_uni: float
    x_val: float
    x_star_val: float
    m_val: float


def _h_map(d: int, beta: float, t: float, exponent: int) -> float:
    e2b = np.exp(2.0 * beta)
    return ((e2b * t + 1.0) / (t + e2b)) ** exponent


def ising_magnetization(d: int, beta: float, tol: float = 1e-14):
    """(x, x*, m) for the zero-field Ising model on the d-regular tree.

    x is the largest solution in (0,1) of x/(1-x) = H_beta(x/(1-x)) with
    H_beta(t) = ((e^{2beta} t + 1)/(t + e^{2beta}))^{d-1}; x* applies the
    root exponent d to the same fixed point, and m = 2 x* - 1.
    """
    if beta <= 0:
        raise DomainError("need beta > 0")
    beta_uni = np.arctanh(1.0 / (d - 1))
    if beta <= beta_uni:
        return 0.5, 0.5, 0.0
    # Monotone decreasing iteration from the image of t = +infinity.
    t = np.exp(2.0 * beta * (d - 1))
    for _ in range(10**5):
        nt = _h_map(d, beta, t, d - 1)
        if abs(nt - t) <= 1e-9 * (1.0 + t):
            break
        t = nt
    lo, hi = t * (1.0 - 1e-6), t * (1.0 + 1e-6)
    g = lambda s: _h_map(d, beta, s, d - 1) - s
    if not (g(lo) > 0.0 > g(hi)):
        raise SolverFailure("lost the bracket around the largest Ising fixed point")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * (1.0 + hi):
            break
    t_star = 0.5 * (lo + hi)
    x = t_star / (1.0 + t_star)
    t_root = _h_map(d, beta, t_star, d)
    x_star = t_root / (1.0 + t_root)
    return x, x_star, 2.0 * x_star - 1.0


def ising_reduction(params: ModelParams) -> IsingReduction:
    if params.w <= 0:
        raise DomainError("need w > 0")
    q = params.q
    beta_star = 0.25 * np.log((1.0 + params.w) * (1.0 + params.w / (q - 1.0)))
    k_coef = 0.25 * np.log((1.0 + params.w) / (1.0 + params.w / (q - 1.0)))
    h_coef = 0.5 * (params.B - np.log(q - 1.0))
    beta_uni = float(np.arctanh(1.0 / (params.d - 1)))
    x, x_star, m = ising_magnetization(params.d, beta_star)
    return IsingReduction(beta_star=float(beta_star), k_coef=float(k_coef),
                          h_coef=float(h_coef), beta_uni=beta_uni,
                          x_val=x, x_star_val=x_star, m_val=m)
