"""Zero-failure certification of score-based binary classifiers."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    DomainError,
    LabeledScore,
    OperatingPoint,
    ReliabilityTarget,
    TnrReport,
    achieved_confidence,
    demonstrated_reliability,
    k_failure_threshold,
    required_sample_size,
    tnr_at,
    zero_failure_threshold,
)
from .testsets import Sample, TestHierarchy, build_hierarchy, extend_with_attacks  # noqa: E402

__all__ = [
    "DomainError",
    "LabeledScore",
    "OperatingPoint",
    "ReliabilityTarget",
    "Sample",
    "TestHierarchy",
    "TnrReport",
    "achieved_confidence",
    "build_hierarchy",
    "demonstrated_reliability",
    "extend_with_attacks",
    "k_failure_threshold",
    "required_sample_size",
    "tnr_at",
    "zero_failure_threshold",
]
