import typing as t


class OverlapKitError(Exception):
    """Base class of every error raised on purpose by overlapkit."""


class InputError(OverlapKitError):
    """Invalid input data or arguments (bad files, columns, cells or group sizes)."""


class DomainError(InputError, ValueError):
    """An argument lies outside the domain of the called function."""

    def __init__(self, name: str, value: t.Any, domain: str):
        super().__init__(f"`{name}` must lie in {domain}, got {value!r}")
        self.name = name
        self.value = value
        self.domain = domain


class ContractError(InputError):
    """Shapes or counts of the arguments don't match each other."""

    def __init__(self, message: str, expected: t.Any = None, actual: t.Any = None):
        if expected is not None or actual is not None:
            message = f"{message} (expected {expected}, got {actual})"
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class UnsupportedWeightsError(ContractError):
    """The rank fast path only exists for proportional weights."""


class NumericalError(OverlapKitError):
    """Base class of numerical failures (exit code 3 on the command line)."""


class LinearAlgebraError(NumericalError):
    """Matrix isn't symmetric, or isn't positive semidefinite even after jitter."""


class DegenerateCovarianceError(NumericalError):
    """Bootstrap covariance carries no information (zero rank, zero trace or zero spread everywhere)."""
