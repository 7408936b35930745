"""Synthetic age-estimation data and Monte Carlo checks of the zero-failure bound.

Randomness comes from numpy's PCG64.  Every integer-age cohort draws from its
own stream, ``SeedSequence(seed, spawn_key=(age,))``, so adding or resizing a
cohort never changes another cohort's draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import LabeledScore, OperatingPoint, TnrReport
from .testsets import Sample

_MC_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class SyntheticDesign:
    """Uniform integer-age cohorts with Gaussian estimation noise.

    Age ranges are inclusive ``(low, high)`` pairs.
    """

    positive_age_range: tuple[int, int] = (12, 17)
    negative_age_range: tuple[int, int] = (18, 50)
    per_year_positive: int = 10
    per_year_negative: int = 100
    noise_sigma: float = 3.0
    noise_mean: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        (plo, phi), (nlo, nhi) = self.positive_age_range, self.negative_age_range
        if not (0 <= plo <= phi and nlo <= nhi):
            raise ValueError("age ranges must be non-empty, non-negative (low, high) pairs")
        if not phi < nlo:
            raise ValueError("positive age range must lie strictly below the negative range")
        if self.per_year_positive < 1 or self.per_year_negative < 1:
            raise ValueError("per-year counts must be at least 1")
        if not (self.noise_sigma > 0 and math.isfinite(self.noise_sigma)):
            raise ValueError("noise_sigma must be positive and finite")
        if not math.isfinite(self.noise_mean):
            raise ValueError("noise_mean must be finite")

    @property
    def positive_count(self) -> int:
        lo, hi = self.positive_age_range
        return (hi - lo + 1) * self.per_year_positive

    @property
    def negative_count(self) -> int:
        lo, hi = self.negative_age_range
        return (hi - lo + 1) * self.per_year_negative


def cohort_rng(seed: int, age: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(age,))))


def _cohorts(design: SyntheticDesign):
    for (lo, hi), count in (
        (design.positive_age_range, design.per_year_positive),
        (design.negative_age_range, design.per_year_negative),
    ):
        for age in range(lo, hi + 1):
            yield age, count


def generate_arrays(design: SyntheticDesign) -> tuple[np.ndarray, np.ndarray]:
    """Actual ages and estimates for every cohort, in cohort order."""
    ages, estimates = [], []
    for age, count in _cohorts(design):
        noise = cohort_rng(design.seed, age).normal(design.noise_mean, design.noise_sigma, size=count)
        ages.append(np.full(count, float(age)))
        estimates.append(age + noise)
    return np.concatenate(ages), np.concatenate(estimates)


def _sample_ids(design: SyntheticDesign) -> list[str]:
    return [f"syn-{age:03d}-{i:05d}" for age, count in _cohorts(design) for i in range(count)]


def generate(design: SyntheticDesign) -> list[Sample]:
    ages, estimates = generate_arrays(design)
    return [Sample(sid, a, e) for sid, a, e in zip(_sample_ids(design), ages.tolist(), estimates.tolist())]


def generate_labeled(
    design: SyntheticDesign, legal_age: float
) -> tuple[list[LabeledScore], list[LabeledScore]]:
    """Same draws as :func:`generate`, already split into positives and negatives."""
    ages, estimates = generate_arrays(design)
    positives, negatives = [], []
    for sid, a, e in zip(_sample_ids(design), ages.tolist(), estimates.tolist()):
        is_positive = a < legal_age
        (positives if is_positive else negatives).append(LabeledScore(sid, is_positive, e, a))
    return positives, negatives


@dataclass(frozen=True)
class Table1Row:
    n: int
    operating_point: OperatingPoint
    tnr_reports: tuple[TnrReport, ...]
    design: SyntheticDesign = field(repr=False)

    @property
    def threshold(self) -> float:
        return self.operating_point.threshold

    def tnr(self, hysteresis_age: float) -> float | None:
        for r in self.tnr_reports:
            if r.hysteresis_age == hysteresis_age:
                return r.tnr
        raise KeyError(hysteresis_age)


def table1_designs(seed: int = 0, per_year_positive=(10, 100, 250), **overrides) -> list[SyntheticDesign]:
    """Designs for the N = 60/600/1500 experiment.

    Each design gets its own seed (``3 * seed + i``) so the three test sets
    are independent draws, as if three different algorithms were tested.
    """
    return [
        SyntheticDesign(per_year_positive=n, seed=3 * seed + i, **overrides)
        for i, n in enumerate(per_year_positive)
    ]


def run_table1_experiment(
    designs: list[SyntheticDesign],
    hysteresis_ages=(18.0, 25.0),
    legal_age: float | None = None,
) -> list[Table1Row]:
    """Zero-failure threshold and TNRs for each design.

    ``legal_age`` defaults to the lower bound of each design's negative range.
    """
    rows = []
    for design in designs:
        legal = float(design.negative_age_range[0]) if legal_age is None else legal_age
        positives, negatives = generate_labeled(design, legal)
        op = core.zero_failure_threshold(positives)
        reports = tuple(core.tnr_at(negatives, op, h) for h in sorted(hysteresis_ages))
        rows.append(Table1Row(len(positives), op, reports, design))
    return rows


@dataclass(frozen=True)
class MonteCarloSummary:
    trials: int
    pass_count: int
    empirical_pass_rate: float
    bound: float
    seed: int

    @property
    def standard_error(self) -> float:
        """Binomial standard error of the pass rate, evaluated at the analytic bound."""
        return math.sqrt(self.bound * (1.0 - self.bound) / self.trials)


def monte_carlo_pass_rate(p_true: float, n: int, trials: int, seed: int = 0) -> MonteCarloSummary:
    """Simulate ``trials`` campaigns of ``n`` Bernoulli(``p_true``) failure draws.

    A campaign passes when it sees zero failures.
    """
    if not 0.0 < p_true < 1.0:
        raise ValueError("p_true must lie in (0, 1)")
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    rows_per_chunk = max(1, _MC_CHUNK_ELEMENTS // n)
    passes = 0
    remaining = trials
    while remaining:
        rows = min(rows_per_chunk, remaining)
        failures = rng.random((rows, n)) < p_true
        passes += int(np.count_nonzero(~failures.any(axis=1)))
        remaining -= rows
    return MonteCarloSummary(trials, passes, passes / trials, (1.0 - p_true) ** n, seed)
