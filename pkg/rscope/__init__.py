"""
Regime-scope: DMD regime libraries and sparse-sensing regime classification.
"""

__version__ = "1.0.0"

from rscope.exceptions import (
    ArgumentError, ConfigError, DegenerateSignalError, DimensionError, FormatError,
    LibraryVersionError, NumericalError, RankError, RscopeError, SingularityError, UsageError,
)
from rscope.models import (
    AugmentedBasis, ClassificationReport, CoherenceReport, ConfusionMatrix, DmdModel, FieldGrid,
    Measurement, MetricMatrix, ObservedLibrary, RankPolicy, Reconstruction, RegimeEntry,
    RegimeLibrary, SensingOperator, SnapshotMatrix,
)

__all__ = [
    "__version__",
    "RscopeError", "UsageError", "ArgumentError", "DimensionError", "ConfigError",
    "FormatError", "LibraryVersionError", "NumericalError", "RankError",
    "SingularityError", "DegenerateSignalError",
    "FieldGrid", "SnapshotMatrix", "RankPolicy", "DmdModel", "RegimeEntry", "RegimeLibrary",
    "AugmentedBasis", "SensingOperator", "Measurement", "ObservedLibrary",
    "ClassificationReport", "Reconstruction", "MetricMatrix", "CoherenceReport", "ConfusionMatrix",
]
