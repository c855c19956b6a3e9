"""Command-line front end.

Subcommands map one-to-one onto the analyses: ``shares`` (per-category
speech shares vs an ideal), ``power`` (presence/absence change matrix),
``tenure`` (tenure vs speech-rate correlation), plus ``synth`` (generate a
seeded synthetic corpus) and ``validate`` (cross-check corpus files).

Reports go to stdout with values rounded half-away-from-zero to 0.1
points (correlations to 3 decimals); text, csv, and jsonl renderings carry
the same numbers. Full-precision plot data is written to ``--out``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .errors import OrgPulseError
from .ingest import load_corpus_files, validate_corpus, write_corpus
from .metrics import (
    ALWAYS_PRESENT,
    NEVER_PRESENT,
    NotApplicable,
    SILENT_BASELINE,
    bucket_by_quarter,
    category_speech_seconds,
    pearson_r,
    presence_matrix,
    share_report,
    tenure_points,
)
from .synthgen import expected_metrics, generate_corpus, parse_synth_config

DEFAULT_FLAG_THRESHOLD = 10.0
DEFAULT_MIN_TENURE_QUARTERS = 8

_NA_MARKS = {ALWAYS_PRESENT: "N/A*", NEVER_PRESENT: "N/A**", SILENT_BASELINE: "N/A***"}
_NA_FOOTNOTES = {
    ALWAYS_PRESENT: "*   Division by zero: no absent group to compare with.",
    NEVER_PRESENT: "**  No meetings with this attribute present.",
    SILENT_BASELINE: "*** Target is silent when this attribute is absent.",
}


@dataclass(frozen=True)
class RunConfig:
    """Resolved options for one analysis run."""

    roster_path: str
    meetings_path: str
    scheme: str | None
    fy_start_month: int
    ideal: dict[str, float] | None
    min_tenure_quarters: int
    output_format: str
    output_dir: str | None
    flag_threshold: float
    nominal_headcount: bool = False
    include_target_absent: bool = False


def round_half_away(value: float, digits: int = 1) -> float:
    """Round to ``digits`` decimals with ties going away from zero."""
    quantum = Decimal(1).scaleb(-digits)
    result = Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP)
    if result == 0:
        result = abs(result)
    return float(result)


def _points(fraction: float) -> float:
    """Fraction -> percentage points at report precision."""
    return round_half_away(fraction * 100.0, 1)


def _parse_ideal(text: str) -> dict[str, float]:
    """Parse ``CAT=P,...``; values may be fractions (sum 1) or percents (sum 100)."""
    ideal: dict[str, float] = {}
    for item in text.split(","):
        category, sep, raw = item.partition("=")
        category = category.strip()
        if not sep or not category:
            raise OrgPulseError(f"bad --ideal entry {item!r}, expected CAT=P")
        try:
            ideal[category] = float(raw)
        except ValueError:
            raise OrgPulseError(f"bad --ideal value {raw!r} for {category!r}") from None
    total = sum(ideal.values())
    if abs(total - 100.0) < 1e-6:
        ideal = {category: value / 100.0 for category, value in ideal.items()}
    return ideal


def _default_fy_start_month() -> int:
    raw = os.environ.get("ORGPULSE_FY_START_MONTH")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise OrgPulseError(f"ORGPULSE_FY_START_MONTH is not an integer: {raw!r}") from None
    if not 1 <= value <= 12:
        raise OrgPulseError(f"ORGPULSE_FY_START_MONTH must be in 1..12, got {value}")
    return value


def _run_config(args: argparse.Namespace) -> RunConfig:
    fy = args.fy_start_month if args.fy_start_month else _default_fy_start_month()
    return RunConfig(
        roster_path=args.roster,
        meetings_path=args.meetings,
        scheme=getattr(args, "scheme", None),
        fy_start_month=fy,
        ideal=_parse_ideal(args.ideal) if getattr(args, "ideal", None) else None,
        min_tenure_quarters=getattr(
            args, "min_tenure_quarters", DEFAULT_MIN_TENURE_QUARTERS
        ),
        output_format=args.format,
        output_dir=args.out,
        flag_threshold=getattr(args, "flag_threshold", DEFAULT_FLAG_THRESHOLD),
        nominal_headcount=getattr(args, "nominal_headcount", False),
        include_target_absent=getattr(args, "include_target_absent", False),
    )


def _load(config: RunConfig):
    roster, meetings, warnings = load_corpus_files(
        config.roster_path, config.meetings_path
    )
    for finding in warnings:
        print(f"warning: {finding.location}: {finding.code}: {finding.message}",
              file=sys.stderr)
    report = validate_corpus(roster, meetings, config.fy_start_month)
    for finding in report.warnings:
        print(f"warning: {finding.location}: {finding.code}: {finding.message}",
              file=sys.stderr)
    if not report.ok:
        for finding in report.errors:
            print(f"error: {finding.location}: {finding.code}: {finding.message}",
                  file=sys.stderr)
        raise OrgPulseError(f"corpus validation failed with {len(report.errors)} errors")
    return roster, meetings


def _write_rows(config: RunConfig, name: str, header: list[str], rows: list[list]):
    """Write full-precision plot data under --out, as csv or jsonl."""
    if config.output_dir is None:
        return
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if config.output_format == "jsonl":
        path = out_dir / f"{name}.jsonl"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for row in rows:
                fh.write(json.dumps(dict(zip(header, row))) + "\n")
    else:
        path = out_dir / f"{name}.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join("" if v is None else repr(v) if isinstance(v, float)
                                  else str(v) for v in row) + "\n")


def _emit(config: RunConfig, header: list[str], rows: list[list], text_lines: list[str]):
    """Print the report: a table in text mode, rows in csv/jsonl mode."""
    if config.output_format == "csv":
        print(",".join(header))
        for row in rows:
            print(",".join("" if v is None else str(v) for v in row))
    elif config.output_format == "jsonl":
        for row in rows:
            print(json.dumps(dict(zip(header, row))))
    else:
        for line in text_lines:
            print(line)


def cmd_shares(config: RunConfig) -> int:
    roster, meetings = _load(config)
    scheme = roster.scheme(config.scheme)
    buckets = bucket_by_quarter(meetings, config.fy_start_month)

    header = ["quarter"] + list(scheme.categories) + ["total_error", "flagged", "note"]
    rows: list[list] = []
    plot_rows: list[list] = []
    width = max([len(c) for c in scheme.categories] + [7]) + 2
    text = [
        f"Speech share deviation from ideal, in points (scheme: {scheme.name})",
        "",
        "Quarter".ljust(9)
        + "".join(c.rjust(width) for c in scheme.categories)
        + "Total".rjust(width),
    ]
    any_flag = False
    for bucket in buckets:
        label = bucket.quarter.label
        try:
            report = share_report(
                bucket,
                roster,
                scheme,
                config.ideal,
                nominal_headcount=config.nominal_headcount,
            )
        except OrgPulseError as exc:
            rows.append([label] + [None] * len(scheme.categories) + [None, None, exc.code])
            text.append(f"{label:<9}  (no data: {exc.code})")
            continue
        deviations = {
            category: _points(report.shares[category] - report.ideal[category])
            for category in report.shares
        }
        total = _points(report.total_error)
        flagged = total >= config.flag_threshold
        any_flag = any_flag or flagged
        rows.append(
            [label]
            + [deviations.get(c) for c in scheme.categories]
            + [total, flagged, ""]
        )
        cells = "".join(
            (f"{deviations[c]:+.1f}" if c in deviations else "n/a").rjust(width)
            for c in scheme.categories
        )
        text.append(f"{label:<9}{cells}" + f"{total:.1f}".rjust(width)
                    + (" *" if flagged else ""))

        overall = category_speech_seconds(bucket, roster, scheme)
        overall_total = sum(overall.values())
        for category in scheme.categories:
            if category in report.shares:
                plot_rows.append(
                    [
                        label,
                        category,
                        report.per_capita[category],
                        report.shares[category],
                        report.ideal[category],
                        report.shares[category] - report.ideal[category],
                        report.errors[category],
                        report.total_error,
                        flagged,
                        overall[category] / overall_total if overall_total else None,
                    ]
                )
    if any_flag:
        text += ["", f"* total error >= {config.flag_threshold:.1f} points"]

    _emit(config, header, rows, text)
    _write_rows(
        config,
        f"shares_{scheme.name}",
        [
            "quarter",
            "category",
            "per_capita_rate",
            "share",
            "ideal",
            "deviation",
            "abs_error",
            "total_error",
            "flagged",
            "overall_share",
        ],
        plot_rows,
    )
    return 0


def cmd_power(config: RunConfig) -> int:
    roster, meetings = _load(config)
    scheme = roster.scheme(config.scheme)
    matrix = presence_matrix(
        meetings,
        roster,
        scheme,
        condition_on_target=not config.include_target_absent,
    )

    header = ["kind", "target", "copresent", "value", "reason"]
    rows: list[list] = []
    plot_rows: list[list] = []
    width = max([len(c) for c in scheme.categories] + [8]) + 2
    text = [
        f"Speech change when an attribute attends, in points (scheme: {scheme.name})",
        "Rows: target attribute. Columns: attribute present vs absent.",
        "",
        " " * 10 + "".join(c.rjust(width) for c in scheme.categories),
    ]
    used_marks: set[str] = set()
    for target in scheme.categories:
        cells = []
        for copresent in scheme.categories:
            if target == copresent:
                cells.append("-----".rjust(width))
                continue
            value = matrix.cells[(target, copresent)]
            if isinstance(value, NotApplicable):
                used_marks.add(value.reason)
                cells.append(_NA_MARKS[value.reason].rjust(width))
                rows.append(["cell", target, copresent, None, value.reason])
                plot_rows.append([target, copresent, None, value.reason])
            else:
                pts = _points(value)
                cells.append(f"{pts:+.1f}".rjust(width))
                rows.append(["cell", target, copresent, pts, ""])
                plot_rows.append([target, copresent, value, ""])
        text.append(f"{target:<10}" + "".join(cells))
    text.append("")
    for reason in (ALWAYS_PRESENT, NEVER_PRESENT, SILENT_BASELINE):
        if reason in used_marks:
            text.append(_NA_FOOTNOTES[reason])
    if matrix.mean_defined is not None:
        pts = _points(matrix.mean_defined)
        rows.append(["summary", "mean_defined", "", pts, ""])
        text.append(f"mean change across defined cells: {pts:+.1f} points")
    if matrix.mean_negative is not None:
        pts = _points(matrix.mean_negative)
        rows.append(["summary", "mean_negative", "", pts, ""])
        text.append(f"mean across negative cells only:  {pts:+.1f} points")

    _emit(config, header, rows, text)
    _write_rows(
        config,
        f"presence_{scheme.name}",
        ["target", "copresent", "change", "reason"],
        plot_rows,
    )
    return 0


def cmd_tenure(config: RunConfig) -> int:
    roster, meetings = _load(config)
    buckets = bucket_by_quarter(meetings, config.fy_start_month)
    points = tenure_points(buckets, roster, config.fy_start_month)
    pairs = [(float(p.tenure_q), p.speech_rate) for p in points]
    threshold = config.min_tenure_quarters
    r_all = pearson_r(pairs)
    r_filtered = pearson_r(pairs, min_x=float(threshold))
    n_filtered = sum(1 for x, _ in pairs if x > threshold)

    def render(value) -> str:
        if isinstance(value, NotApplicable):
            return str(value)
        return f"{round_half_away(value, 3):.3f}"

    header = ["kind", "name", "value", "reason"]
    rows = [
        ["summary", "n_all", len(pairs), ""],
        ["summary", f"n_tenure_gt_{threshold}", n_filtered, ""],
        [
            "summary",
            "r_all",
            None if isinstance(r_all, NotApplicable) else round_half_away(r_all, 3),
            r_all.reason if isinstance(r_all, NotApplicable) else "",
        ],
        [
            "summary",
            f"r_tenure_gt_{threshold}",
            None
            if isinstance(r_filtered, NotApplicable)
            else round_half_away(r_filtered, 3),
            r_filtered.reason if isinstance(r_filtered, NotApplicable) else "",
        ],
    ]
    text = [
        "Tenure vs quarterly speech rate",
        f"points: {len(pairs)} (participant-quarters)",
        f"pearson r, all points: {render(r_all)}",
        f"pearson r, tenure > {threshold} quarters (n={n_filtered}): {render(r_filtered)}",
    ]
    _emit(config, header, rows, text)
    _write_rows(
        config,
        "tenure_scatter",
        ["participant_id", "quarter", "tenure_q", "speech_rate"],
        [[p.participant_id, p.quarter.label, p.tenure_q, p.speech_rate] for p in points],
    )
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    with open(args.config, "rb") as fh:
        content = fh.read()
    try:
        config = parse_synth_config(content)
    except OrgPulseError as exc:
        exc.source = str(args.config)
        raise
    roster, meetings = generate_corpus(config)
    roster_bytes, meetings_bytes = write_corpus(roster, meetings)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "roster.csv").write_bytes(roster_bytes)
    (out_dir / "meetings.csv").write_bytes(meetings_bytes)
    print(
        f"wrote roster.csv ({len(roster.participants)} participants) and "
        f"meetings.csv ({len(meetings)} meetings) to {out_dir}",
        file=sys.stderr,
    )

    expected = expected_metrics(config)
    print("expected metrics (ground truth planted by the generator):")
    for scheme, rates in expected.per_capita_rate.items():
        cells = " ".join(f"{c}={v:.4f}" for c, v in rates.items())
        print(f"  per-capita rate [{scheme}]: {cells}")
    for scheme, shares in expected.shares.items():
        cells = " ".join(f"{c}={v:.4f}" for c, v in shares.items())
        print(f"  share [{scheme}]: {cells}")
    planted = {
        pair: value for pair, value in expected.presence_change.items() if value != 0.0
    }
    if planted:
        cells = " ".join(f"({t},{c})={v:+.4f}" for (t, c), v in planted.items())
        print(f"  presence change (planted): {cells}")
    else:
        print("  presence change (planted): none, all cells expect 0")
    print(f"  tenure correlation sign: {expected.tenure_correlation_sign}")
    if expected.clamp_active:
        for warning in expected.warnings:
            print(f"  warning: ClampActive: {warning}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    fy = args.fy_start_month if args.fy_start_month else _default_fy_start_month()
    roster, meetings, warnings = load_corpus_files(args.roster, args.meetings)
    report = validate_corpus(roster, meetings, fy)
    for finding in list(warnings) + list(report.warnings):
        print(f"warning: {finding.location}: {finding.code}: {finding.message}")
    for finding in report.errors:
        print(f"error: {finding.location}: {finding.code}: {finding.message}")
    print(
        f"{len(roster.participants)} participants, {len(meetings)} meetings, "
        f"{len(report.errors)} errors, "
        f"{len(report.warnings) + len(warnings)} warnings"
    )
    return 0 if report.ok else 1


def _add_corpus_args(parser: argparse.ArgumentParser, *, with_scheme: bool) -> None:
    parser.add_argument("--roster", required=True, help="roster CSV path")
    parser.add_argument("--meetings", required=True, help="meetings CSV path")
    if with_scheme:
        parser.add_argument("--scheme", required=True, help="attribute scheme name")
    parser.add_argument(
        "--fy-start-month",
        dest="fy_start_month",
        type=int,
        default=0,
        help="fiscal year start month 1..12 (default: $ORGPULSE_FY_START_MONTH or 1)",
    )


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format",
        choices=("text", "csv", "jsonl"),
        default="text",
        help="report rendering (default text)",
    )
    parser.add_argument("--out", default=None, help="directory for full-precision plot data")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orgpulse",
        description="Meeting speech-amount analytics over quarterly buckets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shares", help="speech shares vs an ideal distribution")
    _add_corpus_args(p, with_scheme=True)
    _add_output_args(p)
    p.add_argument("--ideal", default=None, help="ideal shares, CAT=P,... (fractions or percents)")
    p.add_argument(
        "--flag-threshold",
        dest="flag_threshold",
        type=float,
        default=DEFAULT_FLAG_THRESHOLD,
        help="flag quarters whose total error reaches this many points (default 10)",
    )
    p.add_argument(
        "--nominal-headcount",
        dest="nominal_headcount",
        action="store_true",
        help="divide by rostered headcount instead of attending headcount",
    )
    p.set_defaults(func=lambda args: cmd_shares(_run_config(args)))

    p = sub.add_parser("power", help="presence/absence speech change matrix")
    _add_corpus_args(p, with_scheme=True)
    _add_output_args(p)
    p.add_argument(
        "--include-target-absent",
        dest="include_target_absent",
        action="store_true",
        help="count meetings the target attribute missed (as zero speech)",
    )
    p.set_defaults(func=lambda args: cmd_power(_run_config(args)))

    p = sub.add_parser("tenure", help="tenure vs speech-rate correlation")
    _add_corpus_args(p, with_scheme=False)
    _add_output_args(p)
    p.add_argument(
        "--min-tenure-quarters",
        dest="min_tenure_quarters",
        type=int,
        default=DEFAULT_MIN_TENURE_QUARTERS,
        help="restricted correlation keeps points with tenure_q strictly above this "
        "(default 8, i.e. more than 2 years)",
    )
    p.set_defaults(func=lambda args: cmd_tenure(_run_config(args)))

    p = sub.add_parser("synth", help="generate a synthetic corpus from a config")
    p.add_argument("--config", required=True, help="synth config path")
    p.add_argument("--out", required=True, help="directory for roster.csv and meetings.csv")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="parse and cross-check corpus files")
    _add_corpus_args(p, with_scheme=False)
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OrgPulseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
