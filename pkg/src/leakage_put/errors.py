"""Exception hierarchy shared by every solver and the CLI."""


class PutError(Exception):
    """Base class for all errors raised by this package."""


class InputError(PutError, ValueError):
    """Invalid user input. The CLI maps these to exit code 2."""


class DimensionMismatch(InputError):
    pass


class NonPositiveSupport(InputError):
    pass


class InvalidDistribution(InputError):
    pass


class InvalidMechanism(InputError):
    pass


class InvalidPermutation(InputError):
    pass


class DomainError(InputError):
    pass


class DegenerateHypotheses(DomainError):
    """p1 and p2 coincide, so there is nothing to test."""


class AlphabetTooSmall(DomainError):
    pass


class BudgetOutOfRange(DomainError):
    pass


class DivisionByZeroSupport(DomainError):
    pass


class SolverError(PutError):
    """The LP solver failed. The CLI maps these to exit code 3."""


class Infeasible(SolverError):
    pass


class Unbounded(SolverError):
    pass


class IterationLimitExceeded(SolverError):
    pass


class ConsistencyError(PutError):
    """A result failed re-validation of its own invariants (CLI exit 4)."""


class RegimeWarning(UserWarning):
    """The requested budget lies outside the regime an approximation targets."""
