"""Corpus file I/O: parse, cross-validate, and write roster and meeting files.

Both files are UTF-8 CSV with a header row.

Roster file columns:
    record_type,participant_id,label,scheme,category,effective_from,hire_date
where record_type is ``participant`` (fills label and, optionally,
hire_date) or ``assignment`` (fills scheme, category, effective_from).
A participant row must precede that participant's assignment rows.

Meetings file columns:
    meeting_id,start,duration_s,participant_id,sample_period_s,samples
with one row per (meeting, attendee); ``samples`` is a semicolon-joined
list of decimals in [0, 1]. Rows of one meeting must agree on start and
duration. Dates are ISO-8601; meeting starts are UTC.

Decimals are serialized with at most 6 fractional digits. Corpora whose
values are exact at that precision (everything this package generates)
round-trip bit-exactly through ``write_corpus`` and the parsers.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date, datetime, timezone

from .errors import (
    CorpusSyntaxError,
    DuplicateParticipantError,
    DurationMismatchError,
    NonMonotoneAssignmentError,
    OrgPulseError,
    SampleOutOfRangeError,
    UnknownParticipantError,
    UnknownSchemeError,
)
from .model import Meeting, Participant, Roster, SpeechTrack, quarter_of_date

ROSTER_COLUMNS = (
    "record_type",
    "participant_id",
    "label",
    "scheme",
    "category",
    "effective_from",
    "hire_date",
)
MEETINGS_COLUMNS = (
    "meeting_id",
    "start",
    "duration_s",
    "participant_id",
    "sample_period_s",
    "samples",
)


@dataclass(frozen=True)
class Finding:
    """One validation finding: where, which code, and what happened."""

    location: str
    code: str
    message: str


@dataclass(frozen=True)
class CorpusValidationReport:
    errors: tuple[Finding, ...] = ()
    warnings: tuple[Finding, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors


def format_decimal(value: float) -> str:
    """Render a number with at most 6 fractional digits, no trailing zeros."""
    if value == int(value):
        return str(int(value))
    return f"{value:.6f}".rstrip("0").rstrip(".")


def _parse_date(text: str, line: int, what: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise CorpusSyntaxError(f"bad {what} date {text!r}", line=line) from None


def _parse_datetime(text: str, line: int) -> datetime:
    raw = text.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(raw)
    except ValueError:
        raise CorpusSyntaxError(f"bad start datetime {text!r}", line=line) from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _parse_float(text: str, line: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise CorpusSyntaxError(f"bad {what} value {text!r}", line=line) from None


def _read_rows(content: bytes, expected: tuple[str, ...], warnings: list[Finding] | None):
    """Decode, check the header, and yield (line_number, row_dict) pairs."""
    try:
        text = content.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise CorpusSyntaxError(f"file is not valid UTF-8: {exc}", line=1) from None
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CorpusSyntaxError("missing header", line=1) from None
    header = [h.strip() for h in header]
    if tuple(header[: len(expected)]) != expected:
        raise CorpusSyntaxError(
            f"bad header: expected {','.join(expected)}", line=1
        )
    extra = header[len(expected) :]
    if extra and warnings is not None:
        warnings.append(
            Finding("line 1", "UnknownColumn", f"ignoring extra columns {extra}")
        )
    rows = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < len(expected):
            raise CorpusSyntaxError(
                f"expected {len(expected)} fields, got {len(row)}", line=line
            )
        rows.append((line, dict(zip(expected, (cell.strip() for cell in row)))))
    return rows


def parse_roster(content: bytes, warnings: list[Finding] | None = None) -> Roster:
    """Parse a roster file into a validated Roster.

    Raises subclasses of OrgPulseError with 1-based line locators on any
    malformed or inconsistent row. Non-fatal findings (e.g. unknown extra
    columns) are appended to ``warnings`` when a list is supplied.
    """
    participants: dict[str, Participant] = {}
    hire_dates: dict[str, date] = {}
    assignments: dict[str, dict[str, list[tuple[date, str]]]] = {}

    for line, row in _read_rows(content, ROSTER_COLUMNS, warnings):
        kind = row["record_type"]
        pid = row["participant_id"]
        if not pid:
            raise CorpusSyntaxError("empty participant_id", line=line)
        if kind == "participant":
            if pid in participants:
                raise DuplicateParticipantError(
                    f"participant {pid!r} declared twice", line=line
                )
            participants[pid] = Participant(pid, row["label"] or pid)
            if row["hire_date"]:
                hire_dates[pid] = _parse_date(row["hire_date"], line, "hire")
        elif kind == "assignment":
            if pid not in participants:
                raise UnknownParticipantError(
                    f"assignment for undeclared participant {pid!r}", line=line
                )
            scheme = row["scheme"]
            if not scheme:
                raise UnknownSchemeError("assignment row with empty scheme", line=line)
            category = row["category"]
            if not category:
                raise CorpusSyntaxError("assignment row with empty category", line=line)
            effective = _parse_date(row["effective_from"], line, "effective_from")
            history = assignments.setdefault(scheme, {}).setdefault(pid, [])
            if history and effective <= history[-1][0]:
                raise NonMonotoneAssignmentError(
                    f"assignments of {pid!r} in scheme {scheme!r} must be strictly "
                    f"increasing by effective_from; {effective.isoformat()} follows "
                    f"{history[-1][0].isoformat()}",
                    line=line,
                )
            history.append((effective, category))
        else:
            raise CorpusSyntaxError(f"unknown record_type {kind!r}", line=line)

    return Roster(
        participants=participants,
        assignments={
            scheme: {pid: tuple(hist) for pid, hist in per_pid.items()}
            for scheme, per_pid in assignments.items()
        },
        hire_dates=hire_dates,
    )


def parse_meetings(
    content: bytes, roster: Roster, warnings: list[Finding] | None = None
) -> tuple[Meeting, ...]:
    """Parse a meetings file; returns meetings sorted by start time, then id.

    Every attendee must exist in ``roster``. Raises OrgPulseError subclasses
    with line locators; the sort makes the result independent of row order.
    """
    starts: dict[str, datetime] = {}
    durations: dict[str, float] = {}
    tracks: dict[str, dict[str, SpeechTrack]] = {}

    for line, row in _read_rows(content, MEETINGS_COLUMNS, warnings):
        mid = row["meeting_id"]
        if not mid:
            raise CorpusSyntaxError("empty meeting_id", line=line)
        start = _parse_datetime(row["start"], line)
        duration = _parse_float(row["duration_s"], line, "duration_s")
        if duration <= 0:
            raise CorpusSyntaxError(f"duration_s must be positive, got {duration}", line=line)
        if mid in starts:
            if starts[mid] != start or durations[mid] != duration:
                raise CorpusSyntaxError(
                    f"meeting {mid!r}: start/duration differ from an earlier row",
                    line=line,
                )
        else:
            starts[mid] = start
            durations[mid] = duration

        pid = row["participant_id"]
        if pid not in roster.participants:
            raise UnknownParticipantError(
                f"meeting {mid!r} attendee {pid!r} not in roster", line=line
            )
        if pid in tracks.get(mid, {}):
            raise CorpusSyntaxError(
                f"meeting {mid!r} has two rows for participant {pid!r}", line=line
            )
        period = _parse_float(row["sample_period_s"], line, "sample_period_s")
        if period <= 0:
            raise CorpusSyntaxError(
                f"sample_period_s must be positive, got {period}", line=line
            )
        samples: list[float] = []
        raw_samples = row["samples"]
        for token in raw_samples.split(";") if raw_samples else []:
            value = _parse_float(token, line, "sample")
            if not 0.0 <= value <= 1.0:
                raise SampleOutOfRangeError(
                    f"sample value {value} outside [0, 1]", line=line
                )
            samples.append(value)
        span = len(samples) * period
        if span > duration + period:
            raise DurationMismatchError(
                f"track spans {format_decimal(span)} s, over the "
                f"{format_decimal(duration)} s meeting plus one window",
                line=line,
            )
        tracks.setdefault(mid, {})[pid] = SpeechTrack(pid, tuple(samples), period)

    meetings = [
        Meeting(mid, starts[mid], durations[mid], tracks[mid]) for mid in starts
    ]
    meetings.sort(key=lambda m: (m.start, m.id))
    return tuple(meetings)


def validate_corpus(
    roster: Roster, meetings: tuple[Meeting, ...] | list[Meeting], fy_start_month: int = 1
) -> CorpusValidationReport:
    """Cross-check a loaded corpus; findings never raise.

    Errors: attendees missing from the roster, or attending without an
    assignment in effect for some scheme. Warnings: attendance before the
    recorded hire date, and quarters inside the corpus span with no meetings.
    """
    errors: list[Finding] = []
    warnings: list[Finding] = []

    for meeting in meetings:
        where = f"meeting {meeting.id}"
        for pid in meeting.tracks:
            if pid not in roster.participants:
                errors.append(
                    Finding(where, "UnknownParticipant", f"attendee {pid!r} not in roster")
                )
                continue
            for scheme in roster.scheme_names():
                history = roster.assignments[scheme].get(pid, ())
                if not history or history[0][0] > meeting.date:
                    errors.append(
                        Finding(
                            where,
                            "NoAssignmentInEffect",
                            f"attendee {pid!r} has no {scheme!r} assignment in effect "
                            f"on {meeting.date.isoformat()}",
                        )
                    )
            hired = roster.hire_dates.get(pid)
            if hired is not None and meeting.date < hired:
                warnings.append(
                    Finding(
                        where,
                        "AttendanceBeforeHire",
                        f"attendee {pid!r} hired {hired.isoformat()}, after this meeting",
                    )
                )

    if meetings:
        quarters = {quarter_of_date(m.date, fy_start_month) for m in meetings}
        cursor = min(quarters, key=lambda q: q.sort_key())
        last = max(quarters, key=lambda q: q.sort_key())
        while cursor < last:
            if cursor not in quarters:
                warnings.append(
                    Finding(f"quarter {cursor.label}", "EmptyQuarter", "no meetings")
                )
            cursor = cursor.next()

    return CorpusValidationReport(errors=tuple(errors), warnings=tuple(warnings))


def write_roster(roster: Roster) -> bytes:
    """Serialize a roster; participant rows first, then assignments in scheme order."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ROSTER_COLUMNS)
    for pid, participant in roster.participants.items():
        hire = roster.hire_dates.get(pid)
        writer.writerow(
            [
                "participant",
                pid,
                participant.label,
                "",
                "",
                "",
                hire.isoformat() if hire is not None else "",
            ]
        )
    for scheme, per_pid in roster.assignments.items():
        for pid, history in per_pid.items():
            for effective, category in history:
                writer.writerow(
                    ["assignment", pid, "", scheme, category, effective.isoformat(), ""]
                )
    return out.getvalue().encode("utf-8")


def write_meetings(meetings: tuple[Meeting, ...] | list[Meeting]) -> bytes:
    """Serialize meetings in the order given (parsers emit start order)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(MEETINGS_COLUMNS)
    for meeting in meetings:
        start = meeting.start.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        for pid, track in meeting.tracks.items():
            writer.writerow(
                [
                    meeting.id,
                    start,
                    format_decimal(meeting.duration_s),
                    pid,
                    format_decimal(track.sample_period_s),
                    ";".join(format_decimal(s) for s in track.samples),
                ]
            )
    return out.getvalue().encode("utf-8")


def write_corpus(
    roster: Roster, meetings: tuple[Meeting, ...] | list[Meeting]
) -> tuple[bytes, bytes]:
    """Serialize (roster, meetings); parsing the output reproduces the inputs."""
    return write_roster(roster), write_meetings(meetings)


def load_corpus_files(roster_path, meetings_path):
    """Read and parse the two corpus files from disk.

    Returns (roster, meetings, warnings). Parse errors are re-raised with
    the offending file recorded in ``exc.source``.
    """
    warnings: list[Finding] = []
    with open(roster_path, "rb") as fh:
        roster_bytes = fh.read()
    with open(meetings_path, "rb") as fh:
        meetings_bytes = fh.read()
    try:
        roster = parse_roster(roster_bytes, warnings)
    except OrgPulseError as exc:
        exc.source = str(roster_path)
        raise
    try:
        meetings = parse_meetings(meetings_bytes, roster, warnings)
    except OrgPulseError as exc:
        exc.source = str(meetings_path)
        raise
    return roster, meetings, warnings
