"""Nested positive test sets, regular/attack partitions and sample diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import LabeledScore

KNOWN_TAGS = frozenset({"regular", "attack", "suspect_clerical", "low_quality"})

DEFAULT_LEGAL_AGE = 18.0
DEFAULT_CLERICAL_GAP = 20.0


@dataclass(frozen=True)
class Sample:
    """One subject: identifier, recorded age and a single age estimate.

    Tags are free-form labels (``KNOWN_TAGS`` plus metadata such as
    ``raters:30``); they may not contain ``;`` ``,`` or whitespace.
    """

    sample_id: str
    actual_age: float
    estimate: float
    tags: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if not isinstance(self.sample_id, str) or not self.sample_id.strip():
            raise ValueError("sample_id must be a non-empty string")
        if self.sample_id != self.sample_id.strip() or any(c in self.sample_id for c in "\r\n"):
            raise ValueError(f"sample_id {self.sample_id!r} has surrounding whitespace or line breaks")
        age = float(self.actual_age)
        estimate = float(self.estimate)
        if not math.isfinite(age) or age < 0:
            raise ValueError(f"actual_age of {self.sample_id!r} must be finite and >= 0, got {age!r}")
        if not math.isfinite(estimate):
            raise ValueError(f"estimate of {self.sample_id!r} must be finite, got {estimate!r}")
        tags = frozenset(self.tags)
        for tag in tags:
            if not tag or any(c in tag for c in ";,\r\n\t ") or tag != tag.strip():
                raise ValueError(f"invalid tag {tag!r} on {self.sample_id!r}")
        object.__setattr__(self, "actual_age", age)
        object.__setattr__(self, "estimate", estimate)
        object.__setattr__(self, "tags", tags)

    def labeled(self, legal_age: float = DEFAULT_LEGAL_AGE) -> LabeledScore:
        return LabeledScore(
            sample_id=self.sample_id,
            is_positive=self.actual_age < legal_age,
            score=self.estimate,
            actual_age=self.actual_age,
        )


@dataclass(frozen=True)
class TestHierarchy:
    """Chain of positive sets, each a proper subset of the next."""

    __test__ = False  # not a pytest class

    levels: tuple[tuple[Sample, ...], ...]
    seed: int | None = None
    legal_age: float = DEFAULT_LEGAL_AGE

    def __post_init__(self) -> None:
        levels = tuple(tuple(sorted(level, key=lambda s: s.sample_id)) for level in self.levels)
        if not levels:
            raise ValueError("a hierarchy needs at least one level")
        previous: set[str] | None = None
        for i, level in enumerate(levels):
            ids = [s.sample_id for s in level]
            if not ids:
                raise ValueError(f"level {i} is empty")
            if len(set(ids)) != len(ids):
                raise ValueError(f"level {i} contains duplicate sample ids")
            for s in level:
                if not s.actual_age < self.legal_age:
                    raise ValueError(
                        f"sample {s.sample_id!r} (age {s.actual_age}) is not below legal age {self.legal_age}"
                    )
            current = set(ids)
            if previous is not None and not previous < current:
                raise ValueError(f"level {i - 1} is not a proper subset of level {i}")
            previous = current
        object.__setattr__(self, "levels", levels)

    @property
    def sizes(self) -> list[int]:
        return [len(level) for level in self.levels]

    def labeled_levels(self) -> list[list[LabeledScore]]:
        return [[s.labeled(self.legal_age) for s in level] for level in self.levels]


@dataclass(frozen=True)
class DiagnosticFlag:
    sample_id: str
    kind: str  # clerical_suspect | hard_example | attack_suspect
    detail: str
    severity_score: float


def _check_unique(samples: Sequence[Sample]) -> None:
    seen: set[str] = set()
    for s in samples:
        if s.sample_id in seen:
            raise ValueError(f"duplicate sample_id {s.sample_id!r}")
        seen.add(s.sample_id)


def build_hierarchy(
    positives: Iterable[Sample],
    sizes: Sequence[int],
    seed: int = 0,
    legal_age: float = DEFAULT_LEGAL_AGE,
) -> TestHierarchy:
    """Nested uniform random subsets of ``positives`` with the given sizes.

    The largest level is drawn from the pool first and every smaller level
    is drawn from the level above it.  The pool is sorted by ``sample_id``
    beforehand, so the result depends only on (pool, sizes, seed).
    """
    pool = sorted(positives, key=lambda s: s.sample_id)
    _check_unique(pool)
    sizes = [int(n) for n in sizes]
    if not sizes:
        raise ValueError("sizes must not be empty")
    if sizes[0] < 1:
        raise ValueError("sizes must be positive")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"sizes must be strictly ascending, got {sizes}")
    if sizes[-1] > len(pool):
        raise ValueError(f"largest size {sizes[-1]} exceeds the positive pool ({len(pool)})")

    rng = np.random.Generator(np.random.PCG64(seed))
    levels: list[list[Sample]] = []
    current = pool
    for size in reversed(sizes):
        if size < len(current):
            picked = np.sort(rng.choice(len(current), size=size, replace=False))
            current = [current[i] for i in picked]
        levels.append(current)
    levels.reverse()
    return TestHierarchy(tuple(tuple(level) for level in levels), seed=seed, legal_age=legal_age)


def extend_with_attacks(
    regular: Iterable[Sample],
    attacks: Iterable[Sample],
    legal_age: float = DEFAULT_LEGAL_AGE,
) -> TestHierarchy:
    """Two-level hierarchy ``[regular, regular + attacks]``."""
    regular = list(regular)
    attacks = list(attacks)
    if not attacks:
        raise ValueError("attack set is empty; use build_hierarchy for a single level")
    for s in attacks:
        if "attack" not in s.tags:
            raise ValueError(f"sample {s.sample_id!r} in the attack set is not tagged 'attack'")
    collisions = {s.sample_id for s in regular} & {s.sample_id for s in attacks}
    if collisions:
        raise ValueError(f"sample ids present in both sets: {sorted(collisions)}")
    return TestHierarchy((tuple(regular), tuple(regular + attacks)), legal_age=legal_age)


def flag_clerical_suspects(
    samples: Iterable[Sample], gap_years: float = DEFAULT_CLERICAL_GAP
) -> list[DiagnosticFlag]:
    """Samples whose estimate is at least ``gap_years`` away from the recorded age."""
    if not gap_years > 0:
        raise ValueError("gap_years must be positive")
    flags = []
    for s in samples:
        gap = abs(s.estimate - s.actual_age)
        if gap >= gap_years:
            flags.append(
                DiagnosticFlag(
                    s.sample_id,
                    "clerical_suspect",
                    f"estimate {s.estimate:g} vs recorded age {s.actual_age:g} (gap {gap:.2f} >= {gap_years:g})",
                    gap,
                )
            )
    flags.sort(key=lambda f: (-f.severity_score, f.sample_id))
    return flags


def hard_examples(
    positives: Iterable[Sample],
    hysteresis_age: float,
    legal_age: float = DEFAULT_LEGAL_AGE,
) -> list[DiagnosticFlag]:
    """Positives estimated above ``hysteresis_age``, highest estimate first."""
    if not hysteresis_age > legal_age:
        raise ValueError(f"hysteresis age {hysteresis_age} must exceed legal age {legal_age}")
    flags = [
        DiagnosticFlag(
            s.sample_id,
            "hard_example",
            f"actual {s.actual_age:g} estimated {s.estimate:g} (> {hysteresis_age:g})",
            s.estimate,
        )
        for s in positives
        if s.actual_age < legal_age and s.estimate > hysteresis_age
    ]
    flags.sort(key=lambda f: (-f.severity_score, f.sample_id))
    return flags
