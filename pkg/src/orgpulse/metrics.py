"""Attribute-level speech metrics over quarter-bucketed corpora.

Three analyses, all pure functions of immutable inputs:

* per-capita speech shares per attribute category versus an ideal
  distribution, with absolute deviations and their total;
* presence/absence rate changes: how much a target category's speech rate
  moves when another category attends, a power-relation signal;
* tenure versus quarterly speech rate, summarized by Pearson correlation.

Every metric is a ratio of speech seconds to attended meeting seconds (or
a correlation of such ratios), so rescaling all activity samples by a
positive constant changes nothing. A participant's speech within one
meeting is clipped to the meeting duration, so the one-window tolerance
allowed on track length can never push a rate above 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    BadIdealError,
    DateBeforeHireError,
    EmptyCategoryError,
    InvariantViolation,
    MissingHireDateError,
    NoActiveCategoriesError,
)
from .model import (
    AttributeScheme,
    Meeting,
    Quarter,
    Roster,
    attribute_of,
    quarter_of_date,
    total_speech_seconds,
)

# Reasons a cell or coefficient can be undefined.
ALWAYS_PRESENT = "AlwaysPresent"
NEVER_PRESENT = "NeverPresent"
SILENT_BASELINE = "SilentBaseline"
TOO_FEW_POINTS = "TooFewPoints"
ZERO_VARIANCE = "ZeroVariance"

SHARE_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class NotApplicable:
    """Marks a metric that is undefined for the given data, and why."""

    reason: str

    def __str__(self) -> str:
        return f"n/a ({self.reason})"


@dataclass(frozen=True)
class QuarterBucket:
    """All meetings of one fiscal quarter, the aggregation unit."""

    quarter: Quarter
    meetings: tuple[Meeting, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "meetings", tuple(self.meetings))
        if not self.meetings:
            raise InvariantViolation(f"bucket {self.quarter.label} has no meetings")
        fy = self.quarter.fy_start_month
        for meeting in self.meetings:
            if quarter_of_date(meeting.date, fy) != self.quarter:
                raise InvariantViolation(
                    f"meeting {meeting.id!r} ({meeting.date.isoformat()}) is outside "
                    f"quarter {self.quarter.label}"
                )


@dataclass(frozen=True)
class ShareReport:
    """Speech shares for one (quarter, scheme) against an ideal distribution.

    ``per_capita`` holds each active category's mean member speech rate
    (speech seconds per attended meeting second). ``shares`` normalizes
    those rates to sum to 1; ``errors`` are absolute share-vs-ideal
    deviations and ``total_error`` their sum. Categories with no attending
    member that quarter are listed in ``inactive`` and carry no entries.
    """

    quarter: Quarter
    scheme: str
    per_capita: dict[str, float]
    shares: dict[str, float]
    ideal: dict[str, float]
    errors: dict[str, float]
    total_error: float
    inactive: tuple[str, ...] = ()


@dataclass(frozen=True)
class PresenceMatrix:
    """All ordered-pair presence effects for one scheme.

    ``cells[(target, copresent)]`` is the relative change of the target
    category's speech rate when the copresent category attends, or
    NotApplicable. ``mean_defined`` averages the numeric cells;
    ``mean_negative`` averages only the negative ones (both None when no
    such cell exists).
    """

    scheme: str
    categories: tuple[str, ...]
    cells: dict[tuple[str, str], float | NotApplicable]
    mean_defined: float | None
    mean_negative: float | None


@dataclass(frozen=True)
class TenurePoint:
    """One participant's quarter: tenure in whole quarters and speech rate."""

    participant_id: str
    quarter: Quarter
    tenure_q: int
    speech_rate: float


def bucket_by_quarter(
    meetings: Iterable[Meeting], fy_start_month: int = 1
) -> tuple[QuarterBucket, ...]:
    """Partition meetings into quarter buckets, ordered by quarter."""
    grouped: dict[Quarter, list[Meeting]] = {}
    for meeting in meetings:
        grouped.setdefault(quarter_of_date(meeting.date, fy_start_month), []).append(
            meeting
        )
    return tuple(
        QuarterBucket(quarter, tuple(grouped[quarter]))
        for quarter in sorted(grouped, key=lambda q: q.sort_key())
    )


def _meeting_speech_s(meeting: Meeting, participant_id: str) -> float:
    """Speech seconds of one attendee, clipped to the meeting duration."""
    return min(
        total_speech_seconds(meeting.tracks[participant_id]), meeting.duration_s
    )


def _categories_present(
    meeting: Meeting, roster: Roster, scheme: AttributeScheme
) -> set[str]:
    return {
        attribute_of(roster, scheme, pid, meeting.date) for pid in meeting.tracks
    }


def per_capita_speech(
    bucket: QuarterBucket,
    roster: Roster,
    scheme: AttributeScheme,
    category: str,
    *,
    nominal_headcount: bool = False,
) -> float:
    """Mean attendance-normalized speech rate of a category in one quarter.

    Each member's rate is their speech seconds divided by the total
    duration of the meetings they attended while holding the category; the
    result is the mean over members. By default the divisor counts members
    who attended at least one meeting; with ``nominal_headcount`` it counts
    every rostered member who held the category at some meeting date that
    quarter, attending or not.

    Raises EmptyCategoryError when no member attended any meeting.
    """
    speech: dict[str, float] = {}
    attended: dict[str, float] = {}
    holders: set[str] = set()
    for meeting in bucket.meetings:
        for pid in roster.participants:
            history = roster.assignments.get(scheme.name, {}).get(pid, ())
            if not history or history[0][0] > meeting.date:
                continue
            if attribute_of(roster, scheme, pid, meeting.date) != category:
                continue
            holders.add(pid)
            if pid in meeting.tracks:
                speech[pid] = speech.get(pid, 0.0) + _meeting_speech_s(meeting, pid)
                attended[pid] = attended.get(pid, 0.0) + meeting.duration_s
    if not attended:
        raise EmptyCategoryError(
            f"no member of {category!r} attended a meeting in {bucket.quarter.label}"
        )
    rates = [speech[pid] / attended[pid] for pid in attended]
    divisor = len(holders) if nominal_headcount else len(rates)
    return sum(rates) / divisor


def share_report(
    bucket: QuarterBucket,
    roster: Roster,
    scheme: AttributeScheme,
    ideal: dict[str, float] | None = None,
    *,
    nominal_headcount: bool = False,
) -> ShareReport:
    """Speech shares, ideal deviations, and total error for one quarter.

    ``ideal`` maps categories to target shares; it must be nonnegative and
    sum to 1 over the quarter's active categories (BadIdealError otherwise).
    None means uniform over the active categories. Raises
    NoActiveCategoriesError when nobody attended or total speech is zero.
    """
    per_capita: dict[str, float] = {}
    inactive: list[str] = []
    for category in scheme.categories:
        try:
            per_capita[category] = per_capita_speech(
                bucket, roster, scheme, category, nominal_headcount=nominal_headcount
            )
        except EmptyCategoryError:
            inactive.append(category)
    if not per_capita:
        raise NoActiveCategoriesError(
            f"no category of scheme {scheme.name!r} is active in "
            f"{bucket.quarter.label}"
        )
    total_rate = sum(per_capita.values())
    if total_rate == 0.0:
        raise NoActiveCategoriesError(
            f"total speech of scheme {scheme.name!r} is zero in {bucket.quarter.label}"
        )

    active = tuple(per_capita)
    if ideal is None:
        ideal_map = {category: 1.0 / len(active) for category in active}
    else:
        for category, value in ideal.items():
            if value < 0:
                raise BadIdealError(f"ideal share of {category!r} is negative: {value}")
        missing = [c for c in active if c not in ideal]
        if missing:
            raise BadIdealError(f"ideal is missing active categories {missing}")
        ideal_map = {category: float(ideal[category]) for category in active}
        ideal_sum = sum(ideal_map.values())
        if abs(ideal_sum - 1.0) > SHARE_SUM_TOLERANCE:
            raise BadIdealError(
                f"ideal shares over active categories sum to {ideal_sum!r}, not 1"
            )

    shares = {category: per_capita[category] / total_rate for category in active}
    errors = {
        category: abs(shares[category] - ideal_map[category]) for category in active
    }
    return ShareReport(
        quarter=bucket.quarter,
        scheme=scheme.name,
        per_capita=per_capita,
        shares=shares,
        ideal=ideal_map,
        errors=errors,
        total_error=sum(errors.values()),
        inactive=tuple(inactive),
    )


def category_speech_seconds(
    bucket: QuarterBucket, roster: Roster, scheme: AttributeScheme
) -> dict[str, float]:
    """Total speech seconds per category over a bucket, with no per-capita division.

    This is the overall (group-level) share basis, as opposed to the
    per-person basis used by share_report.
    """
    totals = {category: 0.0 for category in scheme.categories}
    for meeting in bucket.meetings:
        for pid in meeting.tracks:
            category = attribute_of(roster, scheme, pid, meeting.date)
            totals[category] = totals.get(category, 0.0) + _meeting_speech_s(meeting, pid)
    return totals


def presence_change(
    meetings: Iterable[Meeting],
    roster: Roster,
    scheme: AttributeScheme,
    target: str,
    copresent: str,
    *,
    condition_on_target: bool = True,
) -> float | NotApplicable:
    """Relative change of the target category's speech rate when another attends.

    Meetings are split by whether any attendee holds ``copresent``; on each
    side the target's rate is its members' total speech seconds divided by
    the total duration of the side's meetings. The result is
    present-rate / absent-rate - 1: negative means the copresent category
    suppresses the target's speech.

    With ``condition_on_target`` (the default) only meetings attended by at
    least one target member enter either side, since the target's speaking
    behavior is unobservable elsewhere; otherwise all meetings count and
    target-absent meetings contribute zero speech.

    Undefined cases return NotApplicable: AlwaysPresent when no qualifying
    meeting lacks the copresent category (nothing to compare against),
    NeverPresent when it attends none, SilentBaseline when the target is
    silent on the absent side.
    """
    if target == copresent:
        raise InvariantViolation("target and copresent categories must differ")
    speech = {True: 0.0, False: 0.0}
    duration = {True: 0.0, False: 0.0}
    seen = {True: False, False: False}
    for meeting in meetings:
        present = _categories_present(meeting, roster, scheme)
        if condition_on_target and target not in present:
            continue
        side = copresent in present
        seen[side] = True
        duration[side] += meeting.duration_s
        for pid in meeting.tracks:
            if attribute_of(roster, scheme, pid, meeting.date) == target:
                speech[side] += _meeting_speech_s(meeting, pid)
    if not seen[False]:
        return NotApplicable(ALWAYS_PRESENT)
    if not seen[True]:
        return NotApplicable(NEVER_PRESENT)
    absent_rate = speech[False] / duration[False]
    if absent_rate == 0.0:
        return NotApplicable(SILENT_BASELINE)
    present_rate = speech[True] / duration[True]
    return present_rate / absent_rate - 1.0


def presence_matrix(
    meetings: Iterable[Meeting],
    roster: Roster,
    scheme: AttributeScheme,
    *,
    condition_on_target: bool = True,
) -> PresenceMatrix:
    """Presence effects for every ordered category pair of a scheme."""
    if len(scheme.categories) < 2:
        raise InvariantViolation(
            f"scheme {scheme.name!r} needs at least 2 categories for a presence matrix"
        )
    meeting_list = tuple(meetings)
    cells: dict[tuple[str, str], float | NotApplicable] = {}
    for target in scheme.categories:
        for copresent in scheme.categories:
            if target == copresent:
                continue
            cells[(target, copresent)] = presence_change(
                meeting_list,
                roster,
                scheme,
                target,
                copresent,
                condition_on_target=condition_on_target,
            )
    defined = [value for value in cells.values() if isinstance(value, float)]
    negative = [value for value in defined if value < 0]
    return PresenceMatrix(
        scheme=scheme.name,
        categories=scheme.categories,
        cells=cells,
        mean_defined=sum(defined) / len(defined) if defined else None,
        mean_negative=sum(negative) / len(negative) if negative else None,
    )


def tenure_points(
    buckets: Iterable[QuarterBucket], roster: Roster, fy_start_month: int = 1
) -> tuple[TenurePoint, ...]:
    """One (tenure, speech-rate) point per participant per attended quarter.

    The rate is the participant's speech seconds over the total duration of
    the meetings they attended that quarter; tenure counts whole quarters
    since the hire date's quarter (0 for a hire within the quarter itself).
    Raises MissingHireDateError for attendees without a hire date.
    """
    points: list[TenurePoint] = []
    for bucket in buckets:
        speech: dict[str, float] = {}
        attended: dict[str, float] = {}
        for meeting in bucket.meetings:
            for pid in meeting.tracks:
                speech[pid] = speech.get(pid, 0.0) + _meeting_speech_s(meeting, pid)
                attended[pid] = attended.get(pid, 0.0) + meeting.duration_s
        for pid in sorted(attended):
            hired = roster.hire_dates.get(pid)
            if hired is None:
                raise MissingHireDateError(
                    f"participant {pid!r} attends meetings but has no hire date"
                )
            hire_quarter = quarter_of_date(hired, fy_start_month)
            tenure = bucket.quarter.ordinal() - hire_quarter.ordinal()
            if tenure < 0:
                raise DateBeforeHireError(
                    f"participant {pid!r} attends in {bucket.quarter.label} but was "
                    f"hired {hired.isoformat()}"
                )
            points.append(
                TenurePoint(
                    participant_id=pid,
                    quarter=bucket.quarter,
                    tenure_q=tenure,
                    speech_rate=speech[pid] / attended[pid],
                )
            )
    return tuple(points)


def pearson_r(
    points: Sequence[tuple[float, float]], min_x: float | None = None
) -> float | NotApplicable:
    """Pearson product-moment correlation of (x, y) pairs.

    When ``min_x`` is given, points with x <= min_x are dropped first and
    nothing else changes. Returns NotApplicable(TooFewPoints) when fewer
    than two points remain, NotApplicable(ZeroVariance) when all x or all
    y coincide.
    """
    if min_x is not None:
        points = [(x, y) for x, y in points if x > min_x]
    count = len(points)
    if count < 2:
        return NotApplicable(TOO_FEW_POINTS)
    xs = [float(x) for x, _ in points]
    ys = [float(y) for _, y in points]
    if min(xs) == max(xs) or min(ys) == max(ys):
        return NotApplicable(ZERO_VARIANCE)
    mean_x = sum(xs) / count
    mean_y = sum(ys) / count
    cov = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    var_x = sum((x - mean_x) ** 2 for x in xs)
    var_y = sum((y - mean_y) ** 2 for y in ys)
    denominator = math.sqrt(var_x * var_y)
    if denominator == 0.0:
        return NotApplicable(ZERO_VARIANCE)
    # Clamp float residue that can push |r| past 1 on exact lines.
    return max(-1.0, min(1.0, cov / denominator))
