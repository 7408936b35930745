"""Reading and writing prediction logs and multi-rater estimate files.

Prediction log (UTF-8 CSV, LF or CRLF)::

    sample_id,actual_age,estimate[,tags]

``tags`` is a ``;``-separated list.  Rater files are wide and ragged::

    sample_id,actual_age,e1,e2,...
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import math
import os
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Union

from .core import LabeledScore
from .testsets import DEFAULT_LEGAL_AGE, Sample

log = logging.getLogger(__name__)

LOG_HEADER = ("sample_id", "actual_age", "estimate")
TAGS_COLUMN = "tags"

Source = Union[bytes, str, os.PathLike, BinaryIO]


@dataclass(frozen=True)
class RowError:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


class ParseError(ValueError):
    """A file failed validation; ``errors`` lists every offending row."""

    def __init__(self, errors: list[RowError], source_name: str = "<input>"):
        self.errors = errors
        self.source_name = source_name
        lines = "\n".join(f"  {e}" for e in errors)
        super().__init__(f"{source_name}: {len(errors)} error(s)\n{lines}")


def _read_bytes(source: Source) -> tuple[bytes, str]:
    if isinstance(source, bytes):
        return source, "<bytes>"
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read(), os.fspath(source)
    return source.read(), getattr(source, "name", "<stream>")


def _decode_rows(source: Source) -> tuple[list[tuple[int, list[str]]], str]:
    data, name = _read_bytes(source)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError([RowError(0, f"not valid UTF-8: {exc}")], name) from None
    reader = csv.reader(io.StringIO(text, newline=""))
    rows = []
    for fields in reader:
        if not fields or (len(fields) == 1 and not fields[0].strip()):
            continue
        rows.append((reader.line_num, fields))
    return rows, name


def _parse_float(text: str, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"{column} is not numeric: {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"{column} is not finite: {text!r}")
    return value


def parse_prediction_log_with_errors(source: Source) -> tuple[list[Sample], list[RowError]]:
    """Parse every valid row and collect errors for the rest.

    A missing or malformed header raises :class:`ParseError` immediately.
    """
    rows, name = _decode_rows(source)
    if not rows:
        raise ParseError([RowError(1, "missing header")], name)
    header_line, header = rows[0]
    header = [h.strip() for h in header]
    if header:
        header[0] = header[0].lstrip("\ufeff")
    has_tags = tuple(header) == LOG_HEADER + (TAGS_COLUMN,)
    if tuple(header) != LOG_HEADER and not has_tags:
        expected = ",".join(LOG_HEADER)
        raise ParseError([RowError(header_line, f"bad header {','.join(header)!r}, expected {expected}[,tags]")], name)
    arity = len(header)

    samples: list[Sample] = []
    errors: list[RowError] = []
    first_seen: dict[str, int] = {}
    for line, fields in rows[1:]:
        if len(fields) != arity and not (has_tags and len(fields) == arity - 1):
            errors.append(RowError(line, f"expected {arity} fields, got {len(fields)}"))
            continue
        sample_id = fields[0].strip()
        try:
            if not sample_id:
                raise ValueError("empty sample_id")
            age = _parse_float(fields[1], "actual_age")
            estimate = _parse_float(fields[2], "estimate")
            if age < 0:
                raise ValueError(f"actual_age is negative: {fields[1]!r}")
            tags = frozenset(t.strip() for t in fields[3].split(";") if t.strip()) if len(fields) > 3 else frozenset()
            sample = Sample(sample_id, age, estimate, tags)
        except ValueError as exc:
            errors.append(RowError(line, str(exc)))
            continue
        if sample_id in first_seen:
            errors.append(RowError(line, f"duplicate sample_id {sample_id!r} (lines {first_seen[sample_id]} and {line})"))
            continue
        first_seen[sample_id] = line
        samples.append(sample)
    return samples, errors


def parse_prediction_log(source: Source, strict: bool = True) -> list[Sample]:
    """Parse a prediction log.

    In strict mode any bad row raises :class:`ParseError` listing all of
    them; in lenient mode bad rows are logged and skipped (a bad header is
    always fatal).
    """
    samples, errors = parse_prediction_log_with_errors(source)
    if errors and strict:
        raise ParseError(errors, _source_name(source))
    for e in errors:
        log.warning("skipping %s", e)
    return samples


def _source_name(source: Source) -> str:
    if isinstance(source, (str, os.PathLike)):
        return os.fspath(source)
    return getattr(source, "name", "<input>")


def _fmt(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def write_prediction_log(samples: Iterable[Sample]) -> bytes:
    """Canonical CSV bytes: tags column always present, rows sorted by id, tags sorted."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(LOG_HEADER + (TAGS_COLUMN,))
    for s in sorted(samples, key=lambda s: s.sample_id):
        writer.writerow([s.sample_id, _fmt(s.actual_age), _fmt(s.estimate), ";".join(sorted(s.tags))])
    return out.getvalue().encode("utf-8")


@dataclass(frozen=True)
class RaterRow:
    sample_id: str
    actual_age: float
    estimates: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.estimates:
            raise ValueError(f"{self.sample_id!r} has no rater estimates")
        if not all(math.isfinite(e) for e in self.estimates):
            raise ValueError(f"{self.sample_id!r} has a non-finite rater estimate")


class AggregationPolicy(str, enum.Enum):
    MEAN = "mean"
    WORST_CASE = "worst_case"


def parse_rater_file(source: Source) -> list[RaterRow]:
    """Parse ``sample_id,actual_age,e1,e2,...``; rows may have any number of estimates >= 1."""
    rows, name = _decode_rows(source)
    if not rows:
        raise ParseError([RowError(1, "missing header")], name)
    header_line, header = rows[0]
    if [h.strip().lstrip("\ufeff") for h in header[:2]] != ["sample_id", "actual_age"]:
        raise ParseError([RowError(header_line, "header must start with sample_id,actual_age")], name)

    result: list[RaterRow] = []
    errors: list[RowError] = []
    seen: dict[str, int] = {}
    for line, fields in rows[1:]:
        while fields and not fields[-1].strip():
            fields = fields[:-1]
        try:
            if len(fields) < 3:
                raise ValueError("need sample_id, actual_age and at least one estimate")
            sample_id = fields[0].strip()
            if not sample_id:
                raise ValueError("empty sample_id")
            if sample_id in seen:
                raise ValueError(f"duplicate sample_id {sample_id!r} (lines {seen[sample_id]} and {line})")
            age = _parse_float(fields[1], "actual_age")
            if age < 0:
                raise ValueError("actual_age is negative")
            estimates = tuple(_parse_float(f, f"e{i}") for i, f in enumerate(fields[2:], 1))
            row = RaterRow(sample_id, age, estimates)
        except ValueError as exc:
            errors.append(RowError(line, str(exc)))
            continue
        seen[sample_id] = line
        result.append(row)
    if errors:
        raise ParseError(errors, name)
    return result


def _mean(values: tuple[float, ...]) -> float:
    # fsum/len can round one ulp outside [min, max]
    return min(max(math.fsum(values) / len(values), min(values)), max(values))


def aggregate_raters(rows: Iterable[RaterRow], policy: AggregationPolicy | str) -> list[Sample]:
    policy = AggregationPolicy(policy)
    samples = []
    for row in rows:
        if not row.estimates:
            raise ValueError(f"{row.sample_id!r} has no rater estimates")
        estimate = max(row.estimates) if policy is AggregationPolicy.WORST_CASE else _mean(row.estimates)
        samples.append(Sample(row.sample_id, row.actual_age, estimate, frozenset({f"raters:{len(row.estimates)}"})))
    return samples


def split_by_legal_age(
    samples: Iterable[Sample], legal_age: float = DEFAULT_LEGAL_AGE
) -> tuple[list[LabeledScore], list[LabeledScore]]:
    """Positives are strictly below ``legal_age``; the boundary age is negative."""
    if not legal_age > 0:
        raise ValueError("legal_age must be positive")
    positives: list[LabeledScore] = []
    negatives: list[LabeledScore] = []
    for s in samples:
        labeled = s.labeled(legal_age)
        (positives if labeled.is_positive else negatives).append(labeled)
    return positives, negatives
