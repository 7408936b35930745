"""Regenerate tests/fixtures/appa_validation_replica.csv.

Nine subjects carry the published (actual, estimated) age pairs of the hard
under-18 cases; the remaining 206 are synthetic under-18 subjects whose
estimates stay at or below 25 and within 12 years of the recorded age.
"""

from pathlib import Path

import numpy as np

from zerofail.ingest import write_prediction_log
from zerofail.testsets import Sample

HARD_CASES = [
    ("fig9-a", 6, 42.81, ()),
    ("fig9-b", 13, 28.23, ("low_quality",)),
    ("fig9-c", 17, 27.76, ("attack", "low_quality")),
    ("fig9-d", 17, 27.42, ()),
    ("fig9-e", 17, 26.97, ("attack", "low_quality")),
    ("fig9-f", 17, 26.0, ("attack",)),
    ("fig9-g", 17, 25.64, ("attack",)),
    ("fig9-h", 16, 25.46, ()),
    ("fig9-i", 16, 25.36, ()),
]


def main() -> None:
    rng = np.random.Generator(np.random.PCG64(215))
    samples = []
    for sid, age, est, tags in HARD_CASES:
        tags = set(tags) if "attack" in tags else {*tags, "regular"}
        samples.append(Sample(sid, age, est, frozenset(tags)))
    ages = rng.integers(6, 18, size=206)
    for i, age in enumerate(ages):
        est = float(np.clip(age + rng.normal(1.5, 3.0), max(1.0, age - 8.0), min(25.0, age + 8.0)))
        samples.append(Sample(f"val-{i:04d}", float(age), round(est, 2), frozenset({"regular"})))
    out = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "appa_validation_replica.csv"
    out.write_bytes(write_prediction_log(samples))


if __name__ == "__main__":
    main()
