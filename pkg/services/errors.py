"""Exception types raised by the rounding services."""
from typing import Any, Optional


class PackingError(ValueError):
    """Base class for every domain error in the toolkit."""


class DimensionMismatchError(PackingError):
    """A vector does not match the instance's number of variables."""


class InstanceFormatError(PackingError):
    """An instance, point, solution or plan file could not be parsed."""


class InfeasiblePointError(PackingError):
    """A fractional point violates one or more packing constraints."""

    def __init__(self, message: str, report: Optional[Any] = None):
        super().__init__(message)
        self.report = report


class GeneratorParameterError(PackingError):
    """Generator parameters are out of range."""


class PhaseOverflowError(PackingError):
    """A step count exceeds the representable schedule."""


class DampedScaleError(PackingError):
    """The damped scaling is undefined for the requested right-hand side."""


class LllGuardError(PackingError):
    """The symmetric local-lemma condition fails for the measured degree."""


class EnumerationBudgetError(PackingError):
    """A brute-force enumeration would exceed the configured budget."""


class MixedInstanceError(PackingError):
    """Outcomes computed on different instances were combined."""


class UnknownSuiteError(PackingError):
    """An acceptance suite name is not registered."""


class PlanFormatError(InstanceFormatError):
    """An experiment plan file is malformed."""
