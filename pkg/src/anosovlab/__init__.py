"""Numerical laboratory for Anosov representations of surface and free groups.

Subpackage map:

* :mod:`anosovlab.groups` -- canonical word enumeration and the bulk scan;
* :mod:`anosovlab.reps` -- representation families and functorial builders;
* :mod:`anosovlab.cartan` -- singular value projections, cocycles, basins;
* :mod:`anosovlab.entropy` -- orbit growth rates of linear functionals;
* :mod:`anosovlab.limitset` -- boundary maps, dimension, positivity checks;
* :mod:`anosovlab.cone` -- growth cones and critical norms on them;
* :mod:`anosovlab.posrep` -- positivity structure for split orthogonal groups;
* :mod:`anosovlab.cli` -- the command line driver.
"""

__version__ = "0.1.0"

from .errors import (
    AnosovLabError,
    AuditError,
    BudgetExceededError,
    CheckFailedError,
    ConfigError,
    ConstructionError,
    DimensionOverflowError,
    InsufficientRangeError,
    NoGapError,
    NonTransverseError,
    NonpositiveFunctionalError,
    QuantizationCollisionError,
)

__all__ = [
    "AnosovLabError",
    "AuditError",
    "BudgetExceededError",
    "CheckFailedError",
    "ConfigError",
    "ConstructionError",
    "DimensionOverflowError",
    "InsufficientRangeError",
    "NoGapError",
    "NonTransverseError",
    "NonpositiveFunctionalError",
    "QuantizationCollisionError",
    "__version__",
]
