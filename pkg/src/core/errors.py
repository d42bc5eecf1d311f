from typing import Iterable, Optional


class NablaFracError(Exception):
    """Base class for every error raised by this package."""


class UndefinedRising(NablaFracError, ValueError):
    """t+r is a nonpositive integer while t is not."""


class GammaPoleError(NablaFracError, ValueError):
    """A Gamma pole makes the requested value indeterminate."""


class InsufficientDomain(NablaFracError, ValueError):
    """The function is not defined on enough points for the operation."""


class OutOfDomain(NablaFracError, KeyError):
    """Evaluation of a grid function outside its grid."""

    def __str__(self) -> str:
        # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class GridMismatch(NablaFracError, ValueError):
    """Two grid objects do not share a base point or an index range."""


class InadmissibleSpec(NablaFracError, ValueError):
    """Parameters violate the admissibility hypotheses of the problem."""


class InconsistentSpec(NablaFracError, ValueError):
    """A spec sets incompatible or missing fields."""


class SingularSystem(NablaFracError, RuntimeError):
    """A boundary system that should be nonsingular is singular."""


class SamplingBudgetExhausted(NablaFracError, RuntimeError):
    """Instance synthesis gave up after its resampling budget."""


class UsageError(NablaFracError, ValueError):
    """Invalid command-line usage."""


class IngestError(NablaFracError, ValueError):
    """A grid-function file could not be parsed."""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class GapError(IngestError):
    """Offsets are missing between the smallest and largest offset."""

    def __init__(self, missing: Iterable[int]):
        self.missing = sorted(missing)
        super().__init__(f"missing offsets {self.missing}")


class ConsistencyError(NablaFracError, AssertionError):
    """Two independent evaluations of the same quantity disagree."""
