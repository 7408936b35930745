"""Binomial reliability math, zero/k-failure operating points and TNR.

Decision rule used throughout the package: a subject raises an alarm
(is treated as possibly under age) iff ``score <= threshold``.  A positive
sample therefore fails only when its score is strictly above the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence


class DomainError(ValueError):
    """Raised when a probability or count lies outside its valid domain."""


def _check_open_unit(name: str, value: float) -> float:
    value = float(value)
    if not (0.0 < value < 1.0):
        raise DomainError(f"{name} must lie in the open interval (0, 1), got {value!r}")
    return value


def _check_count(name: str, n: int) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"{name} must be a positive integer, got {n!r}")
    return int(n)


@dataclass(frozen=True)
class ReliabilityTarget:
    """Confidence ``c`` that the per-trial failure probability is below ``1 - reliability``."""

    confidence: float
    reliability: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "confidence", _check_open_unit("confidence", self.confidence))
        object.__setattr__(self, "reliability", _check_open_unit("reliability", self.reliability))

    @property
    def failure_probability(self) -> float:
        return 1.0 - self.reliability


@dataclass(frozen=True)
class LabeledScore:
    """A scored sample labelled positive (under age) or negative.

    ``actual_age`` is optional for positives but required by :func:`tnr_at`.
    """

    sample_id: str
    is_positive: bool
    score: float
    actual_age: float | None = None

    def __post_init__(self) -> None:
        score = float(self.score)
        if not math.isfinite(score):
            raise ValueError(f"score for {self.sample_id!r} must be finite, got {score!r}")
        object.__setattr__(self, "score", score)
        if self.actual_age is not None:
            age = float(self.actual_age)
            if not math.isfinite(age):
                raise ValueError(f"actual_age for {self.sample_id!r} must be finite")
            object.__setattr__(self, "actual_age", age)


@dataclass(frozen=True)
class OperatingPoint:
    threshold: float
    k_allowed_failures: int
    source_sample_id: str


@dataclass(frozen=True)
class TnrReport:
    """True negative rate among negatives aged at least ``hysteresis_age``.

    When no negative is old enough, ``eligible_count`` is 0 and ``tnr`` is
    ``None``; check :attr:`is_empty` before using the rate.
    """

    hysteresis_age: float
    eligible_count: int
    true_negative_count: int
    tnr: float | None

    def __post_init__(self) -> None:
        if not 0 <= self.true_negative_count <= self.eligible_count:
            raise ValueError("need 0 <= true_negative_count <= eligible_count")
        if self.eligible_count == 0:
            if self.tnr is not None:
                raise ValueError("tnr must be None when eligible_count is 0")
        elif self.tnr != self.true_negative_count / self.eligible_count:
            raise ValueError("tnr inconsistent with counts")

    @property
    def is_empty(self) -> bool:
        return self.eligible_count == 0


class SampleSize(NamedTuple):
    exact: float
    ceiling: int


def required_sample_size(target: ReliabilityTarget) -> SampleSize:
    """Number of zero-failure trials needed for ``target``.

    ``N = ln(1 - c) / ln(reliability)``; the integer size is the ceiling.
    """
    if not isinstance(target, ReliabilityTarget):
        target = ReliabilityTarget(*target)
    exact = math.log1p(-target.confidence) / math.log(target.reliability)
    return SampleSize(exact, math.ceil(exact))


def achieved_confidence(n: int, reliability: float) -> float:
    """Confidence demonstrated by ``n`` passed trials: ``1 - reliability**n``."""
    n = _check_count("n", n)
    reliability = _check_open_unit("reliability", reliability)
    return -math.expm1(n * math.log(reliability))


def demonstrated_reliability(n: int, confidence: float) -> float:
    """Reliability demonstrated by ``n`` passed trials at ``confidence``."""
    n = _check_count("n", n)
    confidence = _check_open_unit("confidence", confidence)
    return math.exp(math.log1p(-confidence) / n)


def _positive_list(positives: Iterable[LabeledScore]) -> list[LabeledScore]:
    items = list(positives)
    if not items:
        raise ValueError("positive set is empty")
    for item in items:
        if not item.is_positive:
            raise ValueError(f"sample {item.sample_id!r} is negative; expected positives only")
    return items


def k_failure_threshold(positives: Iterable[LabeledScore], k: int) -> OperatingPoint:
    """Operating point at the (k+1)-th largest positive score.

    At most ``k`` positives score strictly above the threshold, exactly ``k``
    unless the (k)-th and (k+1)-th largest scores are tied.  Among samples
    sharing the threshold score the smallest ``sample_id`` is the source.
    """
    items = _positive_list(positives)
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise ValueError(f"k must be a non-negative integer, got {k!r}")
    k = int(k)
    if k >= len(items):
        raise ValueError(f"k={k} must be smaller than the number of positives ({len(items)})")
    ordered = sorted(items, key=lambda s: (-s.score, s.sample_id))
    threshold = ordered[k].score
    source = min(s.sample_id for s in items if s.score == threshold)
    return OperatingPoint(threshold=threshold, k_allowed_failures=k, source_sample_id=source)


def zero_failure_threshold(positives: Iterable[LabeledScore]) -> OperatingPoint:
    """Lowest threshold that classifies every positive as an alarm."""
    return k_failure_threshold(positives, 0)


def tnr_at(
    negatives: Iterable[LabeledScore],
    op: OperatingPoint | float,
    hysteresis_age: float,
) -> TnrReport:
    """TNR at ``op`` counting only negatives with ``actual_age >= hysteresis_age``.

    Ties at the threshold count as alarms.
    """
    threshold = op.threshold if isinstance(op, OperatingPoint) else float(op)
    eligible = 0
    true_negatives = 0
    for item in negatives:
        if item.is_positive:
            raise ValueError(f"sample {item.sample_id!r} is positive; expected negatives only")
        if item.actual_age is None:
            raise ValueError(f"negative {item.sample_id!r} carries no actual age")
        if item.actual_age >= hysteresis_age:
            eligible += 1
            if item.score > threshold:
                true_negatives += 1
    tnr = true_negatives / eligible if eligible else None
    return TnrReport(float(hysteresis_age), eligible, true_negatives, tnr)


def false_negative_count(positives: Sequence[LabeledScore], threshold: float) -> int:
    """Positives that would not raise an alarm at ``threshold``."""
    return sum(1 for s in positives if s.score > threshold)
