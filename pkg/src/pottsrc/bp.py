"""Belief propagation for the Potts model on the d-regular tree.

Messages live on the simplex over [q].  The BP operator and all fixed points
of interest are symmetric in colors 2..q, so iteration is done in the reduced
scalar coordinate a = nu(1); the full vector map is kept as a cross-check
path.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConvergenceFailure, DomainError
from .params import ModelParams

_SYM_TOL = 1e-14


@dataclass
class ColorLaw:
    """Probability vector over the q colors."""
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise DomainError("ColorLaw needs a 1-d vector of length >= 2")
        if (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
            raise DomainError("ColorLaw entries must be >= 0 and sum to 1")
        self.probs = p

    @property
    def q(self) -> int:
        return self.probs.size

    @property
    def reduced(self) -> Optional[tuple]:
        """(a, (1-a)/(q-1)) when colors 2..q are exchangeable, else None."""
        rest = self.probs[1:]
        if np.ptp(rest) <= _SYM_TOL:
            return float(self.probs[0]), float(rest.mean())
        return None

    @classmethod
    def uniform(cls, q: int) -> "ColorLaw":
        return cls(np.full(q, 1.0 / q))

    @classmethod
    def delta1(cls, q: int) -> "ColorLaw":
        v = np.zeros(q)
        v[0] = 1.0
        return cls(v)

    @classmethod
    def symmetric(cls, a: float, q: int) -> "ColorLaw":
        v = np.full(q, (1.0 - a) / (q - 1))
        v[0] = a
        return cls(v)


def _cavity_fields(params: ModelParams, probs: np.ndarray) -> np.ndarray:
    # A(i) = sum_j e^{beta delta_ij} nu(j) = nu(i)(e^beta - 1) + 1
    return params.w * probs + 1.0


def _field_factor(params: ModelParams, q: int) -> np.ndarray:
    f = np.ones(q)
    f[0] = np.exp(params.B)
    return f


def bp_step(params: ModelParams, nu: ColorLaw) -> ColorLaw:
    """One application of the BP operator, full vector form.

    BP(nu)(i) is proportional to e^{B delta_{i1}} A(i)^{d-1} with
    A(i) = sum_j e^{beta delta_{ij}} nu(j).
    """
    q = params.qi
    if nu.q != q:
        raise DomainError(f"message has {nu.q} colors, params have q={q}")
    A = _cavity_fields(params, nu.probs)
    out = _field_factor(params, q) * A ** (params.d - 1)
    return ColorLaw(out / out.sum())


def root_marginal(params: ModelParams, nu: ColorLaw) -> ColorLaw:
    """Root law under d incoming copies of nu: proportional to
    e^{B delta_{i1}} A(i)^d."""
    q = params.qi
    if nu.q != q:
        raise DomainError(f"message has {nu.q} colors, params have q={q}")
    A = _cavity_fields(params, nu.probs)
    out = _field_factor(params, q) * A ** params.d
    return ColorLaw(out / out.sum())


def edge_overlap(params: ModelParams, nu: ColorLaw) -> float:
    """The pair normalizer D = sum_{ij} e^{beta delta_ij} nu(i) nu(j)."""
    p = nu.probs
    return float(params.w * (p * p).sum() + 1.0)


def bethe_functional(params: ModelParams, nu: ColorLaw) -> float:
    """Bethe free-energy functional Psi(nu).

    Psi = log( sum_i e^{B delta_{i1}} A(i)^d ) - (d/2) log D, where A(i) is
    the cavity field and D the pair normalizer.  Stationary points are
    exactly the BP fixed points, and the free/wired values coincide on the
    critical line.
    """
    q = params.qi
    if (nu.probs <= 0).any():
        raise DomainError("bethe_functional requires strictly positive nu")
    A = _cavity_fields(params, nu.probs)
    vertex = (_field_factor(params, q) * A ** params.d).sum()
    return float(np.log(vertex) - 0.5 * params.d * np.log(edge_overlap(params, nu)))


def _bp_map_a(params: ModelParams, a: float) -> float:
    """Reduced scalar BP map on a = nu(1)."""
    q = params.q
    A1 = params.w * a + 1.0
    A2 = params.w * (1.0 - a) / (q - 1.0) + 1.0
    t = np.exp(params.B) * (A1 / A2) ** (params.d - 1)
    return float(t / (t + q - 1.0))


def _iterate_scalar(params: ModelParams, a0: float, tol: float,
                    max_iter: int) -> float:
    """Fixed-point iteration with an Aitken fallback for critical slowdown."""
    a = a0
    for it in range(max_iter):
        na = _bp_map_a(params, a)
        if abs(na - a) <= tol:
            # require the residual as well as the step to be small
            if abs(_bp_map_a(params, na) - na) <= tol:
                return na
        # Aitken delta-squared every 16 plain steps once the step is tiny
        if it % 16 == 15 and abs(na - a) < 1e-6:
            n2 = _bp_map_a(params, na)
            denom = n2 - 2.0 * na + a
            if denom != 0.0:
                acc = a - (na - a) ** 2 / denom
                if 0.0 < acc < 1.0:
                    res_acc = abs(_bp_map_a(params, acc) - acc)
                    if res_acc <= tol:
                        return acc
                    if res_acc < abs(n2 - na):
                        a = acc
                        continue
            a = n2
            continue
        a = na
    raise ConvergenceFailure(
        f"BP did not converge from a0={a0} within {max_iter} iterations",
        residual=abs(_bp_map_a(params, a) - a), iterations=max_iter)


def bp_fixed_points(params: ModelParams, tol: float = 1e-13,
                    max_iter: int = 10 ** 6):
    """(nu_free, nu_wired): BP limits from the uniform and delta_1 seeds."""
    q = params.qi
    a_free = _iterate_scalar(params, 1.0 / q, tol, max_iter)
    a_wired = _iterate_scalar(params, 1.0, tol, max_iter)
    return ColorLaw.symmetric(a_free, q), ColorLaw.symmetric(a_wired, q)
