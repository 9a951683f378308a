"""Exception hierarchy shared by every juliaspec module.

Two families: input problems (exit code 2 at the command line) and
numerical failures that the library detected but could not repair
(exit code 3).
"""

from __future__ import annotations

from typing import Optional, Sequence


class JuliaspecError(Exception):
    exit_code = 1


# ---------------------------------------------------------------------------
# Input validation
# ---------------------------------------------------------------------------

class ValidationError(JuliaspecError, ValueError):
    exit_code = 2


class DegeneratePolynomialError(ValidationError):
    pass


class PolynomialSyntaxError(ValidationError):
    pass


class BudgetExceededError(ValidationError):
    def __init__(self, what: str, requested: int, budget: int) -> None:
        super().__init__(f"{what}: {requested} exceeds budget {budget}")
        self.requested = requested
        self.budget = budget


class BasePointError(ValidationError):
    pass


class InsufficientDataError(ValidationError):
    pass


class FingerprintMismatchError(ValidationError):
    pass


class OverflowRangeError(ValidationError):
    pass


class ExceptionalPointError(ValidationError):
    pass


class DomainError(ValidationError):
    pass


# ---------------------------------------------------------------------------
# Numerical failures
# ---------------------------------------------------------------------------

class NumericalError(JuliaspecError, ArithmeticError):
    exit_code = 3


class RootCountError(NumericalError):
    """Root multiplicities do not add up to the expected degree."""

    def __init__(self, period: int, found: Sequence, expected: int) -> None:
        total = sum(r.multiplicity for r in found)
        super().__init__(
            f"period {period}: found multiplicity {total}, expected {expected}"
        )
        self.period = period
        self.found = list(found)
        self.expected = expected
        self.total = total


class UndercountError(RootCountError):
    pass


class CycleGroupingError(NumericalError):
    pass


class RootSolverError(NumericalError):
    def __init__(self, target: complex, residual: Optional[float] = None) -> None:
        detail = f" (residual {residual:.3e})" if residual is not None else ""
        super().__init__(f"preimage solve did not converge for w={target}{detail}")
        self.target = target
        self.residual = residual


class FiniteDifferenceError(NumericalError):
    pass


class EmptySpectrumError(NumericalError):
    pass


class RayDivergenceError(NumericalError):
    """Newton pull-back along an external ray lost its branch."""
