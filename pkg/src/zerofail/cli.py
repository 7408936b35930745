"""Command-line interface.

Exit codes: 0 success, 2 invalid input (bad flag, parse error, bad design),
3 log without positive samples.  Reports go to stdout (or ``--out``),
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import core, report, synth, testsets
from .core import DomainError, ReliabilityTarget
from .ingest import ParseError, parse_prediction_log, split_by_legal_age, write_prediction_log

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_POSITIVES = 3

TABLE1_TARGETS = ((0.95, 0.95), (0.95, 0.995), (0.95, 0.998))


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class CliConfig:
    legal_age: float = 18.0
    hysteresis_ages: tuple[float, ...] = (18.0, 25.0, 30.0)
    seed: int = 0
    strict_parse: bool = True
    output_format: str = "markdown"

    def __post_init__(self) -> None:
        if not self.legal_age > 0:
            raise CliError("--legal-age must be positive")
        ages = list(self.hysteresis_ages)
        if not ages:
            raise CliError("--hysteresis needs at least one age")
        if any(a < self.legal_age for a in ages):
            raise CliError(f"--hysteresis ages must be >= legal age {self.legal_age:g}, got {ages}")
        if any(b <= a for a, b in zip(ages, ages[1:])):
            raise CliError(f"--hysteresis ages must be strictly ascending, got {ages}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _age_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        return (int(lo), int(hi if sep else lo))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LOW..HIGH, got {text!r}") from None


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--legal-age", type=float, default=18.0, help="legal age threshold")
    g.add_argument(
        "--hysteresis",
        type=_float_list,
        default=[18.0, 25.0, 30.0],
        help="comma-separated hysteresis ages for TNR",
    )
    g.add_argument("--seed", type=int, default=0, help="random seed")
    g.add_argument(
        "--format",
        choices=report.FORMATS,
        default="markdown",
        help="report format",
    )
    g.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
    g.add_argument("--lenient", action="store_true", help="skip malformed rows instead of failing")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="zerofail", description="Zero-failure certification of age estimators.")
    sub = parser.add_subparsers(dest="command", required=True)
    kw = dict(parents=[common], formatter_class=argparse.ArgumentDefaultsHelpFormatter)

    p = sub.add_parser("plan", help="test-set size for a confidence/reliability target", **kw)
    p.add_argument("--confidence", type=float, required=True, help="confidence c in (0, 1)")
    p.add_argument("--reliability", type=float, required=True, help="reliability 1-p in (0, 1)")

    p = sub.add_parser("certify", help="certify a prediction log", **kw)
    p.add_argument("log", type=Path, help="prediction log CSV")
    p.add_argument("--confidence", type=float, default=None, help="optional target confidence")
    p.add_argument("--reliability", type=float, default=None, help="optional target reliability")

    p = sub.add_parser("hierarchy", help="certify nested positive test sets", **kw)
    p.add_argument("log", type=Path, help="prediction log CSV")
    p.add_argument("--sizes", type=_int_list, default=None, help="ascending level sizes, e.g. 60,200,600,1550")
    p.add_argument(
        "--attack-split",
        action="store_true",
        help="build the two-level regular / regular+attack hierarchy from 'attack' tags",
    )

    p = sub.add_parser("simulate", help="synthetic Gaussian-noise data and the N=60/600/1500 replica", **kw)
    p.add_argument("--per-year-positive", type=int, default=10, help="samples per positive year")
    p.add_argument("--per-year-negative", type=int, default=100, help="samples per negative year")
    p.add_argument("--sigma", type=float, default=3.0, help="noise standard deviation")
    p.add_argument("--noise-mean", type=float, default=0.0, help="noise mean")
    p.add_argument("--years", type=_age_range, default=(12, 17), help="positive age range LOW..HIGH")
    p.add_argument("--negative-years", type=_age_range, default=(18, 50), help="negative age range LOW..HIGH")
    p.add_argument("--emit-csv", type=Path, default=None, help="write the dataset CSV here ('-' for stdout)")
    p.add_argument("--table1", action="store_true", help="run the three-design experiment and print the table")

    p = sub.add_parser("diagnose", help="flag clerical suspects and hard examples", **kw)
    p.add_argument("log", type=Path, help="prediction log CSV")
    p.add_argument("--gap", type=float, default=testsets.DEFAULT_CLERICAL_GAP, help="clerical gap in years")
    return parser


def _config(args) -> CliConfig:
    return CliConfig(
        legal_age=args.legal_age,
        hysteresis_ages=tuple(args.hysteresis),
        seed=args.seed,
        strict_parse=not args.lenient,
        output_format=args.format,
    )


def _emit(data: bytes, out: Path | None) -> None:
    if out is None or str(out) == "-":
        sys.stdout.write(data.decode("utf-8"))
        sys.stdout.flush()
    else:
        out.write_bytes(data)


def _load(path: Path, config: CliConfig):
    if not path.is_file():
        raise CliError(f"cannot read {path}")
    try:
        return parse_prediction_log(path, strict=config.strict_parse)
    except ParseError as exc:
        raise CliError(str(exc)) from None


def _target(confidence, reliability) -> ReliabilityTarget:
    for flag, value in (("--confidence", confidence), ("--reliability", reliability)):
        if not 0.0 < value < 1.0:
            raise CliError(f"{flag} must lie in the open interval (0, 1), got {value!r}")
    return ReliabilityTarget(confidence, reliability)


def cmd_plan(args, config: CliConfig) -> int:
    target = _target(args.confidence, args.reliability)
    size = core.required_sample_size(target)
    p = target.failure_probability
    confidences = sorted({0.90, 0.95, 0.99, target.confidence})
    reliabilities = sorted({r for r in (1 - 2 * p, target.reliability, 1 - p / 2) if 0 < r < 1})
    by_conf = [(c, core.required_sample_size(ReliabilityTarget(c, target.reliability))) for c in confidences]
    by_rel = [(r, core.required_sample_size(ReliabilityTarget(target.confidence, r))) for r in reliabilities]

    if config.output_format == "json":
        payload = {
            "schema": report.SCHEMA,
            "kind": "plan",
            "confidence": target.confidence,
            "reliability": target.reliability,
            "exact_n": size.exact,
            "ceiling_n": size.ceiling,
            "achieved_confidence_at_ceiling": core.achieved_confidence(size.ceiling, target.reliability),
            "sensitivity": {
                "confidence": [{"confidence": c, "exact_n": s.exact, "ceiling_n": s.ceiling} for c, s in by_conf],
                "reliability": [{"reliability": r, "exact_n": s.exact, "ceiling_n": s.ceiling} for r, s in by_rel],
            },
        }
        data = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    elif config.output_format == "csv":
        lines = ["confidence,reliability,exact_n,ceiling_n"]
        seen = set()
        for c, r, s in [(target.confidence, target.reliability, size)] + [
            (c, target.reliability, s) for c, s in by_conf
        ] + [(target.confidence, r, s) for r, s in by_rel]:
            if (c, r) not in seen:
                seen.add((c, r))
                lines.append(f"{c!r},{r!r},{s.exact!r},{s.ceiling}")
        data = "\n".join(lines) + "\n"
    else:
        lines = [
            f"## Zero-failure test size for confidence {target.confidence:g}, reliability {target.reliability:g}",
            "",
            f"- exact N: {size.exact:.1f} ({size.exact!r})",
            f"- ceiling N: {size.ceiling}",
            f"- confidence achieved with {size.ceiling} passes: "
            f"{core.achieved_confidence(size.ceiling, target.reliability):.4f}",
            "",
            "| reliability \\ confidence | " + " | ".join(f"{c:g}" for c, _ in by_conf) + " |",
            "|---|" + "---|" * len(by_conf),
            f"| {target.reliability:g} | " + " | ".join(f"{s.exact:.1f}" for _, s in by_conf) + " |",
            "",
            "| confidence \\ reliability | " + " | ".join(f"{r:g}" for r, _ in by_rel) + " |",
            "|---|" + "---|" * len(by_rel),
            f"| {target.confidence:g} | " + " | ".join(f"{s.exact:.1f}" for _, s in by_rel) + " |",
        ]
        data = "\n".join(lines) + "\n"
    _emit(data.encode("utf-8"), args.out)
    return EXIT_OK


def cmd_certify(args, config: CliConfig) -> int:
    target = None
    if (args.confidence is None) != (args.reliability is None):
        raise CliError("--confidence and --reliability must be given together")
    if args.confidence is not None:
        target = _target(args.confidence, args.reliability)
    samples = _load(args.log, config)
    positives, negatives = split_by_legal_age(samples, config.legal_age)
    if not positives:
        raise CliError(f"{args.log}: no samples below legal age {config.legal_age:g}", EXIT_NO_POSITIVES)
    result = report.certify(
        positives,
        negatives,
        config.hysteresis_ages,
        target,
        positive_set_name=args.log.stem,
        seed=config.seed,
    )
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _emit(report.render(result, config.output_format), args.out)
    return EXIT_OK


def cmd_hierarchy(args, config: CliConfig) -> int:
    samples = _load(args.log, config)
    positives = [s for s in samples if s.actual_age < config.legal_age]
    if not positives:
        raise CliError(f"{args.log}: no samples below legal age {config.legal_age:g}", EXIT_NO_POSITIVES)
    negatives = split_by_legal_age(samples, config.legal_age)[1]
    try:
        if args.attack_split:
            regular = [s for s in positives if "attack" not in s.tags]
            attacks = [s for s in positives if "attack" in s.tags]
            hierarchy = testsets.extend_with_attacks(regular, attacks, config.legal_age)
        else:
            if not args.sizes:
                raise CliError("--sizes is required (or use --attack-split)")
            hierarchy = testsets.build_hierarchy(positives, args.sizes, config.seed, config.legal_age)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    result = report.certify_hierarchy(hierarchy, negatives, config.hysteresis_ages)
    if not result.monotonicity_attestation:
        print("warning: monotonicity attestation failed", file=sys.stderr)
    _emit(report.render(result, config.output_format), args.out)
    return EXIT_OK


def cmd_simulate(args, config: CliConfig) -> int:
    overrides = dict(
        positive_age_range=args.years,
        negative_age_range=args.negative_years,
        per_year_negative=args.per_year_negative,
        noise_sigma=args.sigma,
        noise_mean=args.noise_mean,
    )
    try:
        if args.table1:
            designs = synth.table1_designs(config.seed, **overrides)
        else:
            designs = [synth.SyntheticDesign(per_year_positive=args.per_year_positive, seed=config.seed, **overrides)]
    except (ValueError, TypeError) as exc:
        raise CliError(f"invalid design: {exc}") from None

    if args.emit_csv is not None or not args.table1:
        data = write_prediction_log(synth.generate(designs[0]))
        _emit(data, args.emit_csv if args.emit_csv is not None else (None if args.table1 else args.out))

    if args.table1:
        timestamp = report.now_timestamp()
        rows = []
        for design, (c, r) in zip(designs, TABLE1_TARGETS):
            positives, negatives = synth.generate_labeled(design, config.legal_age)
            rows.append(
                report.certify(
                    positives,
                    negatives,
                    config.hysteresis_ages,
                    ReliabilityTarget(c, r),
                    positive_set_name=f"({c:g}, {r:g})",
                    seed=design.seed,
                    timestamp=timestamp,
                )
            )
        table = report.ResultTable(
            tuple(rows), title=f"Synthetic zero-failure experiment (sigma={args.sigma:g})", seed=config.seed,
            timestamp=timestamp,
        )
        _emit(report.render(table, config.output_format), args.out)
    return EXIT_OK


def cmd_diagnose(args, config: CliConfig) -> int:
    samples = _load(args.log, config)
    try:
        clerical = testsets.flag_clerical_suspects(samples, args.gap)
    except ValueError as exc:
        raise CliError(f"--gap: {exc}") from None
    positives = [s for s in samples if s.actual_age < config.legal_age]
    hard = {
        h: testsets.hard_examples(positives, h, config.legal_age)
        for h in config.hysteresis_ages
        if h > config.legal_age
    }
    _emit(report.render_diagnosis(clerical, hard, args.gap, config.output_format), args.out)
    return EXIT_OK


COMMANDS = {
    "plan": cmd_plan,
    "certify": cmd_certify,
    "hierarchy": cmd_hierarchy,
    "simulate": cmd_simulate,
    "diagnose": cmd_diagnose,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config(args)
        return COMMANDS[args.command](args, config)
    except CliError as exc:
        print(f"zerofail {args.command}: error: {exc}", file=sys.stderr)
        return exc.code
    except DomainError as exc:
        print(f"zerofail {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
