"""Exception hierarchy shared across the package.

Everything raised on purpose derives from :class:`AnosovLabError`, so callers
(and the command line driver) can distinguish deliberate refusals from plain
bugs.  The driver maps subclasses to exit codes: configuration problems exit
with 2, exhausted budgets with 3, and failed mathematical checks with 4.
"""

from __future__ import annotations


class AnosovLabError(Exception):
    """Base class for all deliberate errors raised by this package."""


class ConfigError(AnosovLabError):
    """Invalid or contradictory configuration (unknown keys, bad ranges)."""


class BudgetExceededError(AnosovLabError):
    """An element or wall-clock budget was exhausted before the run finished.

    Attributes
    ----------
    kind : str
        Which budget tripped, ``"elements"`` or ``"seconds"``.
    """

    def __init__(self, message: str, kind: str = "elements"):
        super().__init__(message)
        self.kind = kind


class CheckFailedError(AnosovLabError):
    """A numerical identity or audit that should hold did not."""


class AuditError(CheckFailedError):
    """A sampled cross-check (covering audit, duplicate audit) failed."""


class NoGapError(CheckFailedError):
    """Requested a singular-value gap at an index where there is none."""


class NonTransverseError(CheckFailedError):
    """Flag pairs required to be transverse are (numerically) not."""


class NonpositiveFunctionalError(AnosovLabError):
    """A linear functional is not positive on the sampled growth directions."""


class InsufficientRangeError(AnosovLabError):
    """Too little dynamic range in the data to fit a rate or a dimension."""


class QuantizationCollisionError(AnosovLabError):
    """Two distinct matrices landed too close for the dedup quantizer.

    Raised instead of silently merging or splitting orbit points; the fix is
    a finer quantum or higher working precision, never a guess.
    """


class ConstructionError(AnosovLabError):
    """A representation or geometric object could not be built as requested."""


class DimensionOverflowError(ConstructionError):
    """A functorial construction would exceed the supported matrix size."""


class ChartDegeneracyError(CheckFailedError):
    """An affine chart became degenerate (points too close to its horizon)."""


class ConeViolationError(CheckFailedError):
    """A vector required to lie in an open cone sits outside or on its wall."""
