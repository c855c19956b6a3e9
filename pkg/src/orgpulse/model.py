"""Validated domain types for meeting-speech corpora and elementary derivations.

All types are immutable after construction: collections are coerced to
tuples where practical, and dict-valued fields are never mutated by this
package. Invariants are checked in ``__post_init__`` so any constructed
object is safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, timezone

from .errors import (
    DateBeforeHireError,
    DurationMismatchError,
    InvariantViolation,
    MissingHireDateError,
    NoAssignmentInEffectError,
    SampleOutOfRangeError,
    UnknownParticipantError,
    UnknownSchemeError,
)

# A speech track may run one sampling window past the meeting end
# (trailing partial window).
TRACK_TOLERANCE_WINDOWS = 1


@dataclass(frozen=True)
class Participant:
    """One person; ``id`` is the corpus-wide key, ``label`` is for display."""

    id: str
    label: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise InvariantViolation("participant id must be non-empty")
        if not self.label:
            object.__setattr__(self, "label", self.id)


@dataclass(frozen=True)
class SpeechTrack:
    """Per-window vocal activity ratios for one participant in one meeting.

    Each sample is the fraction of the window spent speaking, in [0, 1];
    0 is silence and 1 is continuous speech.
    """

    participant_id: str
    samples: tuple[float, ...]
    sample_period_s: float = 5.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(float(s) for s in self.samples))
        if not self.participant_id:
            raise InvariantViolation("track participant_id must be non-empty")
        if self.sample_period_s <= 0:
            raise InvariantViolation(
                f"sample_period_s must be positive, got {self.sample_period_s}"
            )
        for i, s in enumerate(self.samples):
            if not 0.0 <= s <= 1.0:
                raise SampleOutOfRangeError(
                    f"sample {i} of participant {self.participant_id!r} is {s}, "
                    "outside [0, 1]"
                )

    def span_s(self) -> float:
        """Seconds covered by the sampled windows."""
        return len(self.samples) * self.sample_period_s


def total_speech_seconds(track: SpeechTrack) -> float:
    """Total speech time in seconds: sum of activity ratios times the window length."""
    return sum(track.samples) * track.sample_period_s


@dataclass(frozen=True)
class Meeting:
    """One recorded session: start instant (UTC), duration, one track per attendee."""

    id: str
    start: datetime
    duration_s: float
    tracks: dict[str, SpeechTrack]

    def __post_init__(self) -> None:
        if not self.id:
            raise InvariantViolation("meeting id must be non-empty")
        start = self.start
        if start.tzinfo is None:
            start = start.replace(tzinfo=timezone.utc)
        else:
            start = start.astimezone(timezone.utc)
        object.__setattr__(self, "start", start)
        if self.duration_s <= 0:
            raise InvariantViolation(
                f"meeting {self.id!r}: duration_s must be positive, got {self.duration_s}"
            )
        if not self.tracks:
            raise InvariantViolation(f"meeting {self.id!r} has no attendees")
        for pid, track in self.tracks.items():
            if track.participant_id != pid:
                raise InvariantViolation(
                    f"meeting {self.id!r}: track keyed {pid!r} belongs to "
                    f"{track.participant_id!r}"
                )
            limit = self.duration_s + TRACK_TOLERANCE_WINDOWS * track.sample_period_s
            if track.span_s() > limit:
                raise DurationMismatchError(
                    f"meeting {self.id!r}: track of {pid!r} spans {track.span_s()} s, "
                    f"over the {self.duration_s} s meeting plus one window"
                )

    @property
    def attendees(self) -> frozenset[str]:
        return frozenset(self.tracks)

    @property
    def date(self) -> date:
        """Calendar date (UTC) of the start instant."""
        return self.start.date()


@dataclass(frozen=True)
class AttributeScheme:
    """A named partition of participants, e.g. role, gender, or board status."""

    name: str
    categories: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "categories", tuple(self.categories))
        if not self.name:
            raise InvariantViolation("scheme name must be non-empty")
        if not self.categories:
            raise InvariantViolation(f"scheme {self.name!r} has no categories")
        if len(set(self.categories)) != len(self.categories):
            raise InvariantViolation(f"scheme {self.name!r} has duplicate categories")


@dataclass(frozen=True)
class Quarter:
    """One fiscal quarter under a fixed fiscal-year start month.

    With ``fy_start_month=1`` (the default) quarters are calendar quarters
    and ``year`` is the calendar year. Ordering follows calendar time.
    """

    year: int
    index: int
    fy_start_month: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.index <= 4:
            raise InvariantViolation(f"quarter index must be in 1..4, got {self.index}")
        if not 1 <= self.fy_start_month <= 12:
            raise InvariantViolation(
                f"fy_start_month must be in 1..12, got {self.fy_start_month}"
            )

    @property
    def label(self) -> str:
        return f"{self.year}.{self.index}Q"

    def sort_key(self) -> tuple[int, int]:
        return (self.year, self.index)

    def ordinal(self) -> int:
        """Sequential quarter number; consecutive quarters differ by 1."""
        return self.year * 4 + (self.index - 1)

    def first_date(self) -> date:
        month = self.fy_start_month + 3 * (self.index - 1)
        year = self.year
        if month > 12:
            month -= 12
            year += 1
        return date(year, month, 1)

    def next(self) -> Quarter:
        if self.index == 4:
            return Quarter(self.year + 1, 1, self.fy_start_month)
        return Quarter(self.year, self.index + 1, self.fy_start_month)

    def __lt__(self, other: "Quarter") -> bool:
        return self.sort_key() < other.sort_key()

    def __le__(self, other: "Quarter") -> bool:
        return self.sort_key() <= other.sort_key()


def quarter_of_date(d: date, fy_start_month: int = 1) -> Quarter:
    """Map a calendar date to its quarter under the given fiscal-year start."""
    if not 1 <= fy_start_month <= 12:
        raise InvariantViolation(f"fy_start_month must be in 1..12, got {fy_start_month}")
    offset = (d.month - fy_start_month) % 12
    year = d.year if d.month >= fy_start_month else d.year - 1
    return Quarter(year, offset // 3 + 1, fy_start_month)


# Assignment history per (scheme, participant): ((effective_from, category), ...)
AssignmentHistory = tuple[tuple[date, str], ...]


@dataclass(frozen=True)
class Roster:
    """Participants, their time-varying attribute assignments, and hire dates.

    ``assignments`` maps scheme name -> participant id -> a history of
    (effective_from, category) entries, strictly increasing by date. An
    assignment stays in effect until the next entry replaces it.
    """

    participants: dict[str, Participant]
    assignments: dict[str, dict[str, AssignmentHistory]] = field(default_factory=dict)
    hire_dates: dict[str, date] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for pid, p in self.participants.items():
            if p.id != pid:
                raise InvariantViolation(f"participant keyed {pid!r} has id {p.id!r}")
        normalized: dict[str, dict[str, AssignmentHistory]] = {}
        for scheme, per_pid in self.assignments.items():
            normalized[scheme] = {}
            for pid, history in per_pid.items():
                if pid not in self.participants:
                    raise UnknownParticipantError(
                        f"assignment in scheme {scheme!r} for unknown participant {pid!r}"
                    )
                entries = tuple((d, str(c)) for d, c in history)
                for (prev, _), (cur, _) in zip(entries, entries[1:]):
                    if cur <= prev:
                        raise InvariantViolation(
                            f"assignments of {pid!r} in scheme {scheme!r} are not "
                            "strictly increasing by effective_from"
                        )
                normalized[scheme][pid] = entries
        object.__setattr__(self, "assignments", normalized)
        for pid in self.hire_dates:
            if pid not in self.participants:
                raise UnknownParticipantError(f"hire date for unknown participant {pid!r}")

    def scheme_names(self) -> tuple[str, ...]:
        return tuple(self.assignments)

    def scheme(self, name: str) -> AttributeScheme:
        """Build the scheme from assignment data; categories keep first-appearance order."""
        if name not in self.assignments:
            raise UnknownSchemeError(f"scheme {name!r} has no assignments in this roster")
        categories: list[str] = []
        for history in self.assignments[name].values():
            for _, category in history:
                if category not in categories:
                    categories.append(category)
        return AttributeScheme(name, tuple(categories))


def attribute_of(
    roster: Roster, scheme: AttributeScheme | str, participant_id: str, on: date
) -> str:
    """Category of ``participant_id`` under ``scheme`` in effect on the given date.

    The entry with the latest effective_from <= ``on`` wins; a change is in
    effect from its date inclusive.
    """
    name = scheme.name if isinstance(scheme, AttributeScheme) else scheme
    if participant_id not in roster.participants:
        raise UnknownParticipantError(f"unknown participant {participant_id!r}")
    history = roster.assignments.get(name, {}).get(participant_id, ())
    current: str | None = None
    for effective_from, category in history:
        if effective_from <= on:
            current = category
        else:
            break
    if current is None:
        raise NoAssignmentInEffectError(
            f"participant {participant_id!r} has no {name!r} assignment in effect "
            f"on {on.isoformat()}"
        )
    return current


def tenure_quarters(
    roster: Roster, participant_id: str, at: date, fy_start_month: int = 1
) -> int:
    """Whole quarter boundaries between the hire date's quarter and ``at``'s quarter.

    Same quarter gives 0; each later quarter adds 1.
    """
    if participant_id not in roster.participants:
        raise UnknownParticipantError(f"unknown participant {participant_id!r}")
    hired = roster.hire_dates.get(participant_id)
    if hired is None:
        raise MissingHireDateError(f"participant {participant_id!r} has no hire date")
    if at < hired:
        raise DateBeforeHireError(
            f"participant {participant_id!r} was hired {hired.isoformat()}, "
            f"after {at.isoformat()}"
        )
    return quarter_of_date(at, fy_start_month).ordinal() - quarter_of_date(
        hired, fy_start_month
    ).ordinal()
