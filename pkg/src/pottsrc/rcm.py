"""Random-cluster BP pre-messages on the d-regular tree.

Works for real q > 2: the recursion lives on the scalar pre-message
b in [0,1] (the probability weight the subtree pushes toward its parent
being connected to the ghost), so no integer spin space is needed.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure
from .params import ModelParams


@dataclass(frozen=True)
class RcmBp:
    gamma: float
    b_free: float
    b_wired: float
    psi_free: float
    psi_wired: float
    s_free: float
    s_wired: float


def bphat(params: ModelParams, k: int, s: float) -> float:
    """One RCM BP update with k children each sending pre-message s."""
    q, B = params.q, params.B
    gamma = params.w / (params.w + q)
    up = (1.0 + (q - 1.0) * gamma * s) ** k
    dn = (1.0 - gamma * s) ** k
    eb = np.exp(B)
    return (eb * up - dn) / (eb * up + (q - 1.0) * dn)


def _iterate(params: ModelParams, s0: float, tol: float, max_iter: int) -> float:
    k = params.d - 1
    s = s0
    for _ in range(max_iter):
        ns = bphat(params, k, s)
        if abs(ns - s) <= tol and abs(bphat(params, k, ns) - ns) <= tol:
            return ns
        s = ns
    raise ConvergenceFailure("RCM pre-message iteration stalled",
                             residual=abs(bphat(params, k, s) - s),
                             iterations=max_iter)


def rcm_bp_fixed_points(params: ModelParams, tol: float = 1e-13,
                        max_iter: int = 10**6) -> RcmBp:
    """Smallest and largest fixed points of the pre-message recursion.

    Iterates from s=0 and s=1; the map is monotone in s so these bracket
    all fixed points. psi is the root-ghost connection probability (d
    children) and s = (q-1)/q * psi + 1/q is the corresponding root
    color-1 weight at integer q.
    """
    q = params.q
    gamma = params.w / (params.w + q)
    b_free = _iterate(params, 0.0, tol, max_iter)
    b_wired = _iterate(params, 1.0, tol, max_iter)
    psi_free = bphat(params, params.d, b_free)
    psi_wired = bphat(params, params.d, b_wired)
    return RcmBp(gamma=gamma, b_free=b_free, b_wired=b_wired,
                 psi_free=psi_free, psi_wired=psi_wired,
                 s_free=(q - 1.0) / q * psi_free + 1.0 / q,
                 s_wired=(q - 1.0) / q * psi_wired + 1.0 / q)
