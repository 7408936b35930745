import io
import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from zerofail.core import zero_failure_threshold
from zerofail.ingest import (
    AggregationPolicy,
    ParseError,
    RaterRow,
    aggregate_raters,
    parse_prediction_log,
    parse_prediction_log_with_errors,
    parse_rater_file,
    split_by_legal_age,
    write_prediction_log,
)
from zerofail.testsets import Sample

HEADER = b"sample_id,actual_age,estimate\n"


def test_single_row():
    (s,) = parse_prediction_log(HEADER + b"s1,16,17.3\n")
    assert (s.sample_id, s.actual_age, s.estimate) == ("s1", 16.0, 17.3)
    positives, negatives = split_by_legal_age([s], 18)
    assert len(positives) == 1 and not negatives


def test_tags_and_crlf():
    data = b"sample_id,actual_age,estimate,tags\r\na,15,20,attack;low_quality\r\nb,30,31,\r\n"
    a, b = parse_prediction_log(data)
    assert a.tags == {"attack", "low_quality"}
    assert b.tags == frozenset()


def test_tags_column_optional_per_row():
    (a,) = parse_prediction_log(b"sample_id,actual_age,estimate,tags\na,15,20\n")
    assert a.tags == frozenset()


def test_duplicate_id_names_both_lines():
    with pytest.raises(ParseError) as info:
        parse_prediction_log(HEADER + b"a,15,16\nb,15,16\na,15,17\n")
    (err,) = info.value.errors
    assert err.line == 4
    assert "lines 2 and 4" in err.message


def test_nan_fixture_single_error():
    rows = [f"s{i},{10 + i},{12.5 + i}" for i in range(10)]
    rows[6] = "s6,16,NaN"
    data = HEADER + ("\n".join(rows) + "\n").encode()
    with pytest.raises(ParseError) as info:
        parse_prediction_log(data)
    assert [e.line for e in info.value.errors] == [8]
    assert "not finite" in info.value.errors[0].message


def test_errors_collected_together():
    data = HEADER + b"a,15\nb,x,3\nc,-1,3\nd,15,inf\ne,15,16\n"
    samples, errors = parse_prediction_log_with_errors(data)
    assert [s.sample_id for s in samples] == ["e"]
    assert [e.line for e in errors] == [2, 3, 4, 5]


def test_lenient_skips(caplog):
    data = HEADER + b"a,15,16\nb,15,oops\n"
    assert [s.sample_id for s in parse_prediction_log(data, strict=False)] == ["a"]
    assert "line 3" in caplog.text


@pytest.mark.parametrize("data", [b"", b"id,age,est\na,1,2\n", b"\xff\xfe"])
def test_bad_header_or_encoding(data):
    with pytest.raises(ParseError):
        parse_prediction_log(data, strict=False)


def test_reads_paths_and_streams(tmp_path):
    path = tmp_path / "log.csv"
    path.write_bytes(HEADER + b"a,15,16\n")
    assert parse_prediction_log(path) == parse_prediction_log(io.BytesIO(path.read_bytes()))


sample_ids = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789-_,\" ", min_size=1, max_size=12).filter(
    lambda s: s == s.strip()
)
finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6)
samples_strategy = st.lists(
    st.builds(
        Sample,
        sample_id=sample_ids,
        actual_age=st.floats(0, 120),
        estimate=finite,
        tags=st.frozensets(st.sampled_from(["regular", "attack", "low_quality", "suspect_clerical", "raters:3"])),
    ),
    unique_by=lambda s: s.sample_id,
    max_size=30,
)


@given(samples_strategy)
def test_write_parse_round_trip(samples):
    data = write_prediction_log(samples)
    parsed = parse_prediction_log(data)
    assert sorted(parsed, key=lambda s: s.sample_id) == sorted(samples, key=lambda s: s.sample_id)
    assert write_prediction_log(parsed) == data


@given(samples_strategy, st.floats(0.5, 100))
def test_partition_law(samples, legal):
    positives, negatives = split_by_legal_age(samples, legal)
    assert len(positives) + len(negatives) == len(samples)
    assert not {p.sample_id for p in positives} & {n.sample_id for n in negatives}
    assert all(p.actual_age < legal for p in positives)
    assert all(n.actual_age >= legal for n in negatives)


def test_boundary_is_negative():
    positives, negatives = split_by_legal_age([Sample("a", 17.9, 20), Sample("b", 18.0, 20)], 18)
    assert [p.sample_id for p in positives] == ["a"]
    assert [n.sample_id for n in negatives] == ["b"]


def test_morph2_shaped_partition():
    rng = random.Random(2)
    samples = [Sample(f"u{i}", rng.randint(12, 17), rng.uniform(5, 40)) for i in range(1550)]
    samples += [Sample(f"a{i}", rng.randint(18, 49), rng.uniform(5, 60)) for i in range(5268)]
    samples += [Sample(f"y{i}", rng.randint(0, 11), rng.uniform(0, 20)) for i in range(40)]
    samples += [Sample(f"o{i}", rng.randint(50, 54), rng.uniform(30, 70)) for i in range(30)]
    in_range = [s for s in samples if 12 <= s.actual_age <= 49]
    positives, negatives = split_by_legal_age(in_range, 18)
    assert (len(positives), len(negatives)) == (1550, 5268)


class TestRaters:
    def test_mean_and_worst(self):
        row = RaterRow("x", 16, (20.0, 30.0))
        assert aggregate_raters([row], "mean")[0].estimate == 25
        (worst,) = aggregate_raters([row], AggregationPolicy.WORST_CASE)
        assert worst.estimate == 30
        assert "raters:2" in worst.tags

    def test_empty_row_rejected(self):
        with pytest.raises(ValueError):
            RaterRow("x", 16, ())

    def test_parse_ragged(self):
        data = b"sample_id,actual_age,e1,e2,e3\na,15,20,21,22\nb,16,30\nc,17,1,2,3,4,5\n"
        rows = parse_rater_file(data)
        assert [len(r.estimates) for r in rows] == [3, 1, 5]

    def test_parse_trailing_empty_cells(self):
        (row,) = parse_rater_file(b"sample_id,actual_age,e1,e2,e3\na,15,20,,\n")
        assert row.estimates == (20.0,)

    @pytest.mark.parametrize("body", [b"a,15\n", b"a,15,nan\n", b"a,15,1\na,16,2\n", b"a,x,1\n"])
    def test_parse_errors(self, body):
        with pytest.raises(ParseError):
            parse_rater_file(b"sample_id,actual_age,e1\n" + body)

    @given(st.lists(st.lists(finite, min_size=1, max_size=40), min_size=1, max_size=20))
    def test_aggregation_bounds(self, estimates):
        rows = [RaterRow(f"r{i}", 15, tuple(e)) for i, e in enumerate(estimates)]
        mean = aggregate_raters(rows, "mean")
        worst = aggregate_raters(rows, "worst_case")
        for row, m, w in zip(rows, mean, worst):
            assert min(row.estimates) <= m.estimate <= max(row.estimates)
            assert w.estimate >= m.estimate
        pm, _ = split_by_legal_age(mean)
        pw, _ = split_by_legal_age(worst)
        assert zero_failure_threshold(pw).threshold >= zero_failure_threshold(pm).threshold

    def test_mean_never_exceeds_max_on_rounding(self):
        (s,) = aggregate_raters([RaterRow("x", 10, (0.1, 0.1, 0.1))], "mean")
        assert s.estimate <= 0.1
        assert math.isclose(s.estimate, 0.1)
