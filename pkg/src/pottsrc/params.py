"""Model parameters for the q-state Potts / random cluster model with a field.

The external field B is carried by a ghost vertex adjacent to every original
vertex, so both couplings come with derived edge weights and open
probabilities:

    w       = e^beta - 1      p_edge  = 1 - e^{-beta} = w/(1+w)
    w_ghost = e^B - 1         p_ghost = 1 - e^{-B}    = w_ghost/(1+w_ghost)
"""
from dataclasses import dataclass, field
import math

from .errors import DomainError, UnsupportedSpinSpace

_INT_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    d: int
    q: float
    beta: float
    B: float
    potts_integer: bool = field(init=False)
    w: float = field(init=False)
    w_ghost: float = field(init=False)
    p_edge: float = field(init=False)
    p_ghost: float = field(init=False)

    def __post_init__(self):
        if self.d < 3 or int(self.d) != self.d:
            raise DomainError(f"d must be an integer >= 3, got {self.d}")
        if not self.q > 2:
            raise DomainError(f"q must exceed 2, got {self.q}")
        if self.beta < 0 or self.B < 0:
            raise DomainError("beta and B must be nonnegative")
        is_int = abs(self.q - round(self.q)) <= _INT_TOL
        w = math.expm1(self.beta)
        wg = math.expm1(self.B)
        object.__setattr__(self, "potts_integer", is_int)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "w_ghost", wg)
        object.__setattr__(self, "p_edge", w / (1.0 + w))
        object.__setattr__(self, "p_ghost", wg / (1.0 + wg))

    @property
    def qi(self) -> int:
        """Integer q for spin-space operations."""
        if not self.potts_integer:
            raise UnsupportedSpinSpace(
                f"operation requires integer q, got q={self.q}")
        return int(round(self.q))

    def with_beta(self, beta: float) -> "ModelParams":
        return ModelParams(self.d, self.q, beta, self.B)
