"""Exception types shared across the package.

The CLI maps these onto exit codes: precondition/domain problems exit
with 2, numerical failures with 3.
"""


class FragstatError(Exception):
    """Base class for all package errors."""


class DomainError(FragstatError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PreconditionError(FragstatError, ValueError):
    """A documented precondition of an operation is not met."""


class UnsupportedOperationError(FragstatError, ValueError):
    """The coefficient variant does not support the requested operation."""


class SpecFileError(FragstatError, ValueError):
    """A configuration file or override could not be parsed or validated."""


class NumericalError(FragstatError, RuntimeError):
    """Base class for failures of numerical procedures."""


class AssemblyError(NumericalError):
    """A discrete operator entry could not be evaluated."""


class ConvergenceError(NumericalError):
    """An iteration exhausted its budget without meeting its tolerance."""


class DegeneracyError(NumericalError):
    """The discrete null space is not one-dimensional."""


class IllConditionedError(NumericalError):
    """A regression or linear solve is too ill-conditioned to trust."""
