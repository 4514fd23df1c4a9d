"""Exception taxonomy shared across the package."""


class PottsError(Exception):
    """Base class for all package-specific failures."""


class UnsupportedSpinSpace(PottsError):
    """Operation requires integer q (a genuine spin space)."""


class ConvergenceFailure(PottsError):
    """Fixed-point iteration did not reach tolerance within the budget."""

    def __init__(self, msg, residual=None, iterations=None):
        super().__init__(msg)
        self.residual = residual
        self.iterations = iterations


class DomainError(PottsError):
    """Input outside the mathematical domain of the operation."""


class OutsideCriticalWindow(PottsError):
    """Field B not inside (0, B_+): no critical temperature exists."""


class OutsideCriticalLine(PottsError):
    """Operation only defined for parameters on the critical line."""


class SolverFailure(PottsError):
    """Root bracketing or polishing failed."""


class BudgetExceeded(PottsError):
    """Instance larger than the exhaustive-enumeration budget."""


class InvalidArity(PottsError):
    """Degree/parity constraint violated (e.g. n*d odd)."""


class InvalidState(PottsError):
    """Object in the wrong state for the operation (e.g. double augmentation)."""


class NotConnected(PottsError):
    """Graph must be connected."""


class PlacementFailure(PottsError):
    """Separation constraints could not be met within the retry budget."""


class ConfigError(PottsError):
    """Run configuration failed validation."""


class DivergentRegime(PottsError):
    """(d-1)*lambda_2 >= 1: conditioning products do not converge."""


class NumericalFailure(PottsError):
    """A numerical sanity check failed (e.g. Hessian not negative-definite)."""


class PlanFailure(PottsError):
    """Mixture-tuning planner could not produce an admissible plan."""


class ConditionUnsatisfied(PottsError):
    """Precondition of a domination check not met; check skipped."""
