import math

import numpy as np
import pytest

from zerofail import core, synth
from zerofail.ingest import split_by_legal_age
from zerofail.synth import SyntheticDesign


def test_paper_counts():
    samples = synth.generate(SyntheticDesign(per_year_positive=10, seed=1))
    positives, negatives = split_by_legal_age(samples, 18)
    assert (len(positives), len(negatives)) == (60, 3300)
    ages = [s.actual_age for s in positives]
    assert all(ages.count(a) == 10 for a in range(12, 18))


def test_deterministic():
    d = SyntheticDesign(per_year_positive=7, per_year_negative=3, seed=42)
    assert synth.generate(d) == synth.generate(d)
    assert synth.generate(d) != synth.generate(SyntheticDesign(per_year_positive=7, per_year_negative=3, seed=43))


def test_cohort_streams_independent():
    """Resizing or adding cohorts leaves the other cohorts' draws unchanged."""
    small = synth.generate(SyntheticDesign(per_year_positive=5, negative_age_range=(18, 20), seed=9))
    big = synth.generate(SyntheticDesign(per_year_positive=50, negative_age_range=(18, 30), seed=9))
    big_by_id = {s.sample_id: s for s in big}
    negatives = [s for s in small if s.actual_age >= 18]
    assert all(big_by_id[s.sample_id] == s for s in negatives)
    # per-cohort prefixes agree for the resized positive cohorts
    assert all(big_by_id[s.sample_id] == s for s in small if s.actual_age < 18)


def test_generate_labeled_matches_generate():
    d = SyntheticDesign(per_year_positive=4, per_year_negative=2, seed=3)
    positives, negatives = synth.generate_labeled(d, 18)
    expected = split_by_legal_age(synth.generate(d), 18)
    assert (positives, negatives) == expected


def test_noiseless_limit():
    d = SyntheticDesign(noise_sigma=1e-9, seed=0)
    samples = synth.generate(d)
    assert all(abs(s.estimate - s.actual_age) < 1e-6 for s in samples)
    (row,) = synth.run_table1_experiment([d], (18,))
    assert row.threshold == pytest.approx(17, abs=1e-6)
    assert row.tnr(18) == 1.0


def test_noise_moments():
    d = SyntheticDesign(
        positive_age_range=(0, 0), negative_age_range=(1, 1), per_year_positive=10**6,
        per_year_negative=1, noise_sigma=3.0, noise_mean=0.5, seed=11,
    )
    ages, estimates = synth.generate_arrays(d)
    errors = (estimates - ages)[: 10**6]
    assert abs(errors.mean() - 0.5) <= 3 * 3.0 / 1000
    assert errors.std() == pytest.approx(3.0, rel=0.01)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(positive_age_range=(12, 18), negative_age_range=(18, 50)),
        dict(positive_age_range=(20, 25)),
        dict(per_year_positive=0),
        dict(noise_sigma=0.0),
        dict(positive_age_range=(17, 12)),
    ],
)
def test_invalid_designs(kwargs):
    with pytest.raises(ValueError):
        SyntheticDesign(**kwargs)


def test_table1_shape():
    rows = synth.run_table1_experiment(synth.table1_designs(0), (18, 25))
    assert [r.n for r in rows] == [60, 600, 1500]
    for r in rows:
        assert 20 <= r.threshold <= 30
        assert r.tnr(25) > r.tnr(18)


def test_single_sample_threshold():
    d = SyntheticDesign(positive_age_range=(15, 15), per_year_positive=1, seed=4)
    (row,) = synth.run_table1_experiment([d])
    (only,) = [s for s in synth.generate(d) if s.actual_age < 18]
    assert row.threshold == only.estimate


def test_table1_matches_core_composition():
    d = synth.table1_designs(5)[1]
    (row,) = synth.run_table1_experiment([d], (18, 25, 30))
    positives, negatives = split_by_legal_age(synth.generate(d), 18)
    op = core.zero_failure_threshold(positives)
    assert row.operating_point == op
    assert list(row.tnr_reports) == [core.tnr_at(negatives, op, h) for h in (18, 25, 30)]


def test_outlier_possible():
    """A smaller independent set can yield the higher threshold."""
    hits = 0
    for seed in range(200):
        rows = synth.run_table1_experiment(synth.table1_designs(seed)[::2], (18,))
        hits += rows[0].threshold > rows[1].threshold
    assert hits > 0


class TestMonteCarlo:
    @pytest.mark.parametrize("p, n", [(0.05, 59), (0.3, 5), (0.01, 100)])
    def test_calibration(self, p, n):
        mc = synth.monte_carlo_pass_rate(p, n, 20_000, seed=1)
        assert mc.bound == pytest.approx((1 - p) ** n)
        assert abs(mc.empirical_pass_rate - mc.bound) <= 4 * math.sqrt(mc.bound * (1 - mc.bound) / mc.trials)
        assert mc.empirical_pass_rate == mc.pass_count / mc.trials

    def test_near_certain_failure(self):
        assert synth.monte_carlo_pass_rate(0.9999, 10, 1000, seed=0).pass_count == 0

    def test_single_trial(self):
        mc = synth.monte_carlo_pass_rate(0.3, 1, 50_000, seed=2)
        assert mc.empirical_pass_rate == pytest.approx(0.7, abs=4 * math.sqrt(0.21 / 50_000))

    def test_deterministic(self):
        assert synth.monte_carlo_pass_rate(0.1, 7, 999, 5) == synth.monte_carlo_pass_rate(0.1, 7, 999, 5)

    def test_chunking_does_not_change_stream_shape(self, monkeypatch):
        monkeypatch.setattr(synth, "_MC_CHUNK_ELEMENTS", 7 * 10)
        chunked = synth.monte_carlo_pass_rate(0.1, 7, 1000, 5)
        assert chunked.trials == 1000
        assert 0 <= chunked.pass_count <= 1000

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.5])
    def test_bad_p(self, p):
        with pytest.raises(ValueError):
            synth.monte_carlo_pass_rate(p, 5, 10)


def test_negative_estimates_not_clamped():
    d = SyntheticDesign(positive_age_range=(0, 0), negative_age_range=(1, 1), per_year_positive=2000,
                        per_year_negative=1, noise_sigma=3.0, seed=0)
    _, estimates = synth.generate_arrays(d)
    assert np.any(estimates < 0)
