"""Certification results and their JSON / Markdown / CSV renderings."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
from dataclasses import dataclass, replace
from typing import Iterable, Sequence, Union

from . import __version__, core
from .core import LabeledScore, OperatingPoint, ReliabilityTarget, TnrReport
from .testsets import TestHierarchy

SCHEMA = "zerofail/1"
FORMATS = ("json", "markdown", "csv")


def _fmt_number(value: float | None) -> str:
    if value is None:
        return ""
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def fingerprint_scores(positives: Iterable[LabeledScore], negatives: Iterable[LabeledScore]) -> str:
    """SHA-256 of the canonical ``sample_id,actual_age,estimate`` CSV of all inputs, sorted by id."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["sample_id", "actual_age", "estimate"])
    for s in sorted([*positives, *negatives], key=lambda s: s.sample_id):
        writer.writerow([s.sample_id, _fmt_number(s.actual_age), _fmt_number(s.score)])
    return "sha256:" + hashlib.sha256(out.getvalue().encode("utf-8")).hexdigest()


def now_timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class CertificationResult:
    positive_set_name: str
    positive_count: int
    operating_point: OperatingPoint
    tnr_reports: tuple[TnrReport, ...]
    dataset_fingerprint: str
    target: ReliabilityTarget | None = None
    achieved_confidence: float | None = None
    required_n_exact: float | None = None
    required_n: int | None = None
    warnings: tuple[str, ...] = ()
    seed: int | None = None
    tool_version: str = __version__
    timestamp: str = ""

    def __post_init__(self) -> None:
        ages = [r.hysteresis_age for r in self.tnr_reports]
        if ages != sorted(ages):
            raise ValueError("tnr_reports must be sorted by hysteresis age")

    @property
    def shortfall(self) -> bool:
        return self.required_n is not None and self.positive_count < self.required_n

    def tnr(self, hysteresis_age: float) -> float | None:
        for r in self.tnr_reports:
            if r.hysteresis_age == hysteresis_age:
                return r.tnr
        raise KeyError(hysteresis_age)

    def to_dict(self) -> dict:
        return {
            "kind": "certification",
            "positive_set_name": self.positive_set_name,
            "positive_count": self.positive_count,
            "operating_point": {
                "threshold": self.operating_point.threshold,
                "k_allowed_failures": self.operating_point.k_allowed_failures,
                "source_sample_id": self.operating_point.source_sample_id,
            },
            "tnr_reports": [
                {
                    "hysteresis_age": r.hysteresis_age,
                    "eligible_count": r.eligible_count,
                    "true_negative_count": r.true_negative_count,
                    "tnr": r.tnr,
                }
                for r in self.tnr_reports
            ],
            "target": None
            if self.target is None
            else {"confidence": self.target.confidence, "reliability": self.target.reliability},
            "achieved_confidence": self.achieved_confidence,
            "required_n_exact": self.required_n_exact,
            "required_n": self.required_n,
            "warnings": list(self.warnings),
            "seed": self.seed,
            "dataset_fingerprint": self.dataset_fingerprint,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CertificationResult":
        op = d["operating_point"]
        target = d.get("target")
        return cls(
            positive_set_name=d["positive_set_name"],
            positive_count=d["positive_count"],
            operating_point=OperatingPoint(op["threshold"], op["k_allowed_failures"], op["source_sample_id"]),
            tnr_reports=tuple(
                TnrReport(r["hysteresis_age"], r["eligible_count"], r["true_negative_count"], r["tnr"])
                for r in d["tnr_reports"]
            ),
            dataset_fingerprint=d["dataset_fingerprint"],
            target=None if target is None else ReliabilityTarget(target["confidence"], target["reliability"]),
            achieved_confidence=d.get("achieved_confidence"),
            required_n_exact=d.get("required_n_exact"),
            required_n=d.get("required_n"),
            warnings=tuple(d.get("warnings", ())),
            seed=d.get("seed"),
            tool_version=d["tool_version"],
            timestamp=d["timestamp"],
        )


@dataclass(frozen=True)
class HierarchyResult:
    """Per-level certifications of a nested hierarchy, smallest level first.

    ``shared_sources`` lists ``(lower_level, upper_level, sample_id)`` for
    adjacent levels whose thresholds coincide; the sample lies in both.  An
    unchanged threshold keeps the source chosen at the smaller level, even if
    a tied sample with a smaller id only appears in the larger one.
    """

    levels: tuple[CertificationResult, ...]
    monotonicity_attestation: bool
    shared_sources: tuple[tuple[int, int, str], ...] = ()
    seed: int | None = None
    tool_version: str = __version__
    timestamp: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": "hierarchy",
            "levels": [level.to_dict() for level in self.levels],
            "monotonicity_attestation": self.monotonicity_attestation,
            "shared_sources": [list(s) for s in self.shared_sources],
            "seed": self.seed,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HierarchyResult":
        return cls(
            levels=tuple(CertificationResult.from_dict(x) for x in d["levels"]),
            monotonicity_attestation=d["monotonicity_attestation"],
            shared_sources=tuple((a, b, c) for a, b, c in d["shared_sources"]),
            seed=d.get("seed"),
            tool_version=d["tool_version"],
            timestamp=d["timestamp"],
        )


@dataclass(frozen=True)
class ResultTable:
    """Independent certifications shown side by side (one row each)."""

    rows: tuple[CertificationResult, ...]
    title: str = ""
    seed: int | None = None
    tool_version: str = __version__
    timestamp: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": "table",
            "title": self.title,
            "rows": [r.to_dict() for r in self.rows],
            "seed": self.seed,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResultTable":
        return cls(
            rows=tuple(CertificationResult.from_dict(x) for x in d["rows"]),
            title=d["title"],
            seed=d.get("seed"),
            tool_version=d["tool_version"],
            timestamp=d["timestamp"],
        )


Result = Union[CertificationResult, HierarchyResult, ResultTable]


def certify(
    positives: Sequence[LabeledScore],
    negatives: Sequence[LabeledScore],
    hysteresis_ages: Iterable[float],
    target: ReliabilityTarget | None = None,
    *,
    positive_set_name: str = "positives",
    seed: int | None = None,
    timestamp: str | None = None,
) -> CertificationResult:
    """Zero-failure operating point on ``positives`` and TNRs on ``negatives``.

    With a ``target``, records the confidence demonstrated by the actual
    positive count and warns when that count is below the required size.
    """
    positives = list(positives)
    negatives = list(negatives)
    op = core.zero_failure_threshold(positives)
    reports = tuple(core.tnr_at(negatives, op, h) for h in sorted(float(h) for h in hysteresis_ages))

    warnings: list[str] = []
    achieved = required_exact = required = None
    if target is not None:
        size = core.required_sample_size(target)
        required_exact, required = size.exact, size.ceiling
        achieved = core.achieved_confidence(len(positives), target.reliability)
        if len(positives) < required:
            warnings.append(
                f"shortfall: {len(positives)} positives < {required} required "
                f"for confidence {target.confidence:g} on reliability {target.reliability:g}"
            )
    for r in reports:
        if r.is_empty:
            warnings.append(f"no negatives aged {r.hysteresis_age:g} or older; TNR undefined")

    return CertificationResult(
        positive_set_name=positive_set_name,
        positive_count=len(positives),
        operating_point=op,
        tnr_reports=reports,
        dataset_fingerprint=fingerprint_scores(positives, negatives),
        target=target,
        achieved_confidence=achieved,
        required_n_exact=required_exact,
        required_n=required,
        warnings=tuple(warnings),
        seed=seed,
        timestamp=now_timestamp() if timestamp is None else timestamp,
    )


def check_monotonicity(levels: Sequence[CertificationResult]) -> bool:
    """Thresholds non-decreasing and every TNR non-increasing down the levels."""
    for lower, upper in zip(levels, levels[1:]):
        if upper.operating_point.threshold < lower.operating_point.threshold:
            return False
        for a, b in zip(lower.tnr_reports, upper.tnr_reports):
            if a.tnr is not None and b.tnr is not None and b.tnr > a.tnr:
                return False
    return True


def certify_hierarchy(
    hierarchy: TestHierarchy,
    negatives: Sequence[LabeledScore],
    hysteresis_ages: Iterable[float],
    target: ReliabilityTarget | None = None,
    *,
    timestamp: str | None = None,
    name_prefix: str = "zFail",
) -> HierarchyResult:
    timestamp = now_timestamp() if timestamp is None else timestamp
    hysteresis_ages = list(hysteresis_ages)
    negatives = list(negatives)
    levels = []
    for positives in hierarchy.labeled_levels():
        levels.append(
            certify(
                positives,
                negatives,
                hysteresis_ages,
                target,
                positive_set_name=f"{name_prefix}-{len(positives)}",
                seed=hierarchy.seed,
                timestamp=timestamp,
            )
        )
    shared = []
    for i in range(len(levels) - 1):
        lower, upper = levels[i], levels[i + 1]
        if lower.operating_point.threshold == upper.operating_point.threshold:
            # the lower source is also an arg-max of the upper level; keep it so
            # tied maxima stay attributed to the innermost set
            levels[i + 1] = replace(upper, operating_point=lower.operating_point)
            shared.append((i, i + 1, lower.operating_point.source_sample_id))
    return HierarchyResult(
        levels=tuple(levels),
        monotonicity_attestation=check_monotonicity(levels),
        shared_sources=tuple(shared),
        seed=hierarchy.seed,
        timestamp=timestamp,
    )


def to_json(result: Result) -> bytes:
    payload = {"schema": SCHEMA, **result.to_dict()}
    text = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
    return (text + "\n").encode("utf-8")


def load_json(data: bytes | str) -> Result:
    d = json.loads(data)
    if d.get("schema") != SCHEMA:
        raise ValueError(f"unsupported schema {d.get('schema')!r}, expected {SCHEMA!r}")
    kind = d.get("kind")
    if kind == "certification":
        return CertificationResult.from_dict(d)
    if kind == "hierarchy":
        return HierarchyResult.from_dict(d)
    if kind == "table":
        return ResultTable.from_dict(d)
    raise ValueError(f"unknown result kind {kind!r}")


def _tnr_cell(report: TnrReport) -> str:
    return "n/a" if report.tnr is None else f"{report.tnr:.4f}"


def _markdown_rows(header: list[str], rows: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in rows]
    return lines


def _provenance_lines(seed, version, timestamp, fingerprints: Sequence[str]) -> list[str]:
    lines = [f"- seed: {seed if seed is not None else 'n/a'}", f"- tool version: {version}"]
    if timestamp:
        lines.append(f"- timestamp: {timestamp}")
    for fp in dict.fromkeys(fingerprints):
        lines.append(f"- dataset: `{fp}`")
    return lines


def _table_markdown(results: Sequence[CertificationResult]) -> list[str]:
    ages = [r.hysteresis_age for r in results[0].tnr_reports] if results else []
    header = ["set", "N", "threshold"] + [f"TNR_{a:g}" for a in ages]
    rows = [
        [r.positive_set_name, str(r.positive_count), f"{r.operating_point.threshold:.2f}"]
        + [_tnr_cell(t) for t in r.tnr_reports]
        for r in results
    ]
    return _markdown_rows(header, rows)


def _certification_details(r: CertificationResult) -> list[str]:
    lines = [
        f"- operating threshold: {r.operating_point.threshold:.4f} "
        f"(set by `{r.operating_point.source_sample_id}`, k = {r.operating_point.k_allowed_failures})"
    ]
    if r.target is not None:
        lines.append(
            f"- target: confidence {r.target.confidence:g}, reliability {r.target.reliability:g}; "
            f"required N = {r.required_n_exact:.1f} (ceiling {r.required_n}), used N = {r.positive_count}, "
            f"achieved confidence {r.achieved_confidence:.4f}"
        )
    for t in r.tnr_reports:
        lines.append(
            f"- TNR_{t.hysteresis_age:g}: {_tnr_cell(t)} ({t.true_negative_count}/{t.eligible_count})"
        )
    lines += [f"- WARNING: {w}" for w in r.warnings]
    return lines


def to_markdown(result: Result) -> bytes:
    if isinstance(result, CertificationResult):
        lines = [f"## Zero-failure certification: {result.positive_set_name}", ""]
        lines += _table_markdown([result]) + [""] + _certification_details(result) + [""]
        lines += _provenance_lines(result.seed, result.tool_version, result.timestamp, [result.dataset_fingerprint])
    elif isinstance(result, ResultTable):
        lines = [f"## {result.title or 'Zero-failure certifications'}", ""]
        lines += _table_markdown(result.rows) + [""]
        for r in result.rows:
            lines += [f"- {w} ({r.positive_set_name})" for w in r.warnings]
        lines += _provenance_lines(
            result.seed, result.tool_version, result.timestamp, [r.dataset_fingerprint for r in result.rows]
        )
    else:
        lines = ["## Nested zero-failure hierarchy", ""]
        ages = [t.hysteresis_age for t in result.levels[0].tnr_reports]
        header = ["policy", "set", "N", "threshold", "TNR", "TN/eligible"]
        rows = []
        for j, age in enumerate(ages):
            for level in result.levels:
                t = level.tnr_reports[j]
                rows.append(
                    [
                        f"Challenge {age:g}",
                        level.positive_set_name,
                        str(level.positive_count),
                        f"{level.operating_point.threshold:.2f}",
                        _tnr_cell(t),
                        f"{t.true_negative_count}/{t.eligible_count}",
                    ]
                )
        lines += _markdown_rows(header, rows) + [""]
        lines.append(f"- monotonicity attestation: {'PASS' if result.monotonicity_attestation else 'FAIL'}")
        for lo, hi, sid in result.shared_sources:
            lines.append(
                f"- {result.levels[lo].positive_set_name} and {result.levels[hi].positive_set_name} "
                f"share threshold source `{sid}`"
            )
        lines += _provenance_lines(
            result.seed, result.tool_version, result.timestamp, [r.dataset_fingerprint for r in result.levels]
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


CSV_COLUMNS = [
    "set",
    "level",
    "n",
    "threshold",
    "source_sample_id",
    "hysteresis_age",
    "eligible_count",
    "true_negative_count",
    "tnr",
]


def to_csv(result: Result) -> bytes:
    """One row per (level, hysteresis age)."""
    if isinstance(result, CertificationResult):
        levels: Sequence[CertificationResult] = [result]
    elif isinstance(result, ResultTable):
        levels = result.rows
    else:
        levels = result.levels
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for i, level in enumerate(levels):
        for t in level.tnr_reports:
            writer.writerow(
                [
                    level.positive_set_name,
                    i,
                    level.positive_count,
                    _fmt_number(level.operating_point.threshold),
                    level.operating_point.source_sample_id,
                    _fmt_number(t.hysteresis_age),
                    t.eligible_count,
                    t.true_negative_count,
                    _fmt_number(t.tnr),
                ]
            )
    return out.getvalue().encode("utf-8")


def render(result: Result, format: str = "json") -> bytes:
    if format == "json":
        return to_json(result)
    if format == "markdown":
        return to_markdown(result)
    if format == "csv":
        return to_csv(result)
    raise ValueError(f"unknown format {format!r}; choose from {', '.join(FORMATS)}")


def diagnosis_dict(clerical, hard: dict[float, list], gap_years: float) -> dict:
    def flag(f):
        return {"sample_id": f.sample_id, "kind": f.kind, "detail": f.detail, "severity_score": f.severity_score}

    return {
        "schema": SCHEMA,
        "kind": "diagnosis",
        "gap_years": gap_years,
        "clerical_suspects": [flag(f) for f in clerical],
        "hard_examples": [
            {"hysteresis_age": age, "flags": [flag(f) for f in flags]} for age, flags in sorted(hard.items())
        ],
    }


def render_diagnosis(clerical, hard: dict[float, list], gap_years: float, format: str = "markdown") -> bytes:
    """Render clerical suspects and per-hysteresis hard examples."""
    if format == "json":
        text = json.dumps(diagnosis_dict(clerical, hard, gap_years), sort_keys=True, indent=2, ensure_ascii=False)
        return (text + "\n").encode("utf-8")
    if format == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["kind", "hysteresis_age", "sample_id", "severity_score", "detail"])
        for f in clerical:
            writer.writerow([f.kind, "", f.sample_id, _fmt_number(f.severity_score), f.detail])
        for age, flags in sorted(hard.items()):
            for f in flags:
                writer.writerow([f.kind, _fmt_number(age), f.sample_id, _fmt_number(f.severity_score), f.detail])
        return out.getvalue().encode("utf-8")
    if format != "markdown":
        raise ValueError(f"unknown format {format!r}")
    lines = [f"## Clerical suspects (gap >= {gap_years:g} years): {len(clerical)}", ""]
    lines += [f"- `{f.sample_id}`: {f.detail}" for f in clerical] or ["- none"]
    for age, flags in sorted(hard.items()):
        lines += ["", f"## Hard examples above {age:g}: {len(flags)}", ""]
        lines += [f"- `{f.sample_id}`: {f.detail}" for f in flags] or ["- none"]
    return ("\n".join(lines) + "\n").encode("utf-8")
