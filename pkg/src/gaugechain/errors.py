"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class GaugeChainError(Exception):
    """Base class for all errors raised by gaugechain."""


class TruncationError(GaugeChainError):
    """A state or operator leaks too much weight into the top Fock levels."""


class MatrixOverflowError(GaugeChainError, OverflowError):
    """Norm of an exponent (or a propagated map) exceeds the configured cap."""


class BranchSingularityError(GaugeChainError):
    """The SU(1,1) Gauss decomposition has no finite factors at this point."""


class DomainError(GaugeChainError, ValueError):
    """A logarithm or square root would need a branch we refuse to pick."""


class ConvergenceError(GaugeChainError):
    """An iterative solver ran out of iterations."""


class JacobianSingularError(GaugeChainError):
    """Newton step impossible: the (numerical) Jacobian is singular."""


class GridMismatchError(GaugeChainError, ValueError):
    """Time-indexed inputs live on different grids."""


class HermiticityViolation(GaugeChainError):
    """A generator expected to be Hermitian is not, beyond tolerance."""


class ScenarioError(GaugeChainError, ValueError):
    """Scenario file could not be parsed or failed validation.

    ``problems`` lists every violated field so a single run reports all of
    them at once.
    """

    def __init__(self, message: str, problems: list[str] | None = None):
        self.problems = list(problems or [])
        if self.problems:
            message = message + ": " + "; ".join(self.problems)
        super().__init__(message)


class StepSizeError(GaugeChainError):
    """Fixed-step integrator's local error estimate exceeds its tolerance."""
