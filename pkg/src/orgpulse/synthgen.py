"""Seeded synthetic corpora with known ground-truth communication structure.

Serves as the verification oracle for the metrics: the generator plants a
per-category base speech rate, multiplicative suppression effects between
categories, and a linear tenure drift, and ``expected_metrics`` states the
closed-form values the measured metrics should recover.

Randomness comes from an explicitly specified 64-bit generator (SplitMix64)
so that a (seed, config) pair maps to one bit-identical corpus, independent
of platform or library versions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone

from .errors import ConfigInvalidError
from .model import Meeting, Participant, Roster, SpeechTrack, quarter_of_date

_MASK64 = (1 << 64) - 1
# Attendance draws are redone when nobody shows up; cap the retries so a
# pathological config fails loudly instead of spinning.
_MAX_ATTENDANCE_RETRIES = 1000


class SplitMix64:
    """SplitMix64: state advances by a fixed odd constant, output is mixed.

    next_u64:
        state += 0x9E3779B97F4A7C15            (mod 2^64)
        z = state
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9   (mod 2^64)
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB   (mod 2^64)
        return z ^ (z >> 31)
    """

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform in the open interval (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) / float(1 << 53)

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p

    def normal(self) -> float:
        """Standard normal via Box-Muller (two uniforms per call, no cache)."""
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def gamma(self, shape: float) -> float:
        """Gamma(shape, 1) via Marsaglia-Tsang squeeze."""
        if shape < 1.0:
            # Boost: Gamma(a) = Gamma(a+1) * U^(1/a)
            return self.gamma(shape + 1.0) * self.uniform() ** (1.0 / shape)
        d = shape - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            x = self.normal()
            v = (1.0 + c * x) ** 3
            if v <= 0.0:
                continue
            u = self.uniform()
            if u < 1.0 - 0.0331 * x**4:
                return d * v
            if math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
                return d * v

    def beta(self, alpha: float, beta: float) -> float:
        a = self.gamma(alpha)
        b = self.gamma(beta)
        return a / (a + b)


@dataclass(frozen=True)
class ParticipantSpec:
    """One synthetic member: category per scheme plus behavioral parameters."""

    id: str
    categories: dict[str, str]
    hire_date: date
    base_rate: float
    attendance_prob: float
    label: str = ""

    def __post_init__(self) -> None:
        if not self.label:
            object.__setattr__(self, "label", self.id)


@dataclass(frozen=True)
class SynthConfig:
    """Everything the generator needs; equal configs with equal seeds give
    byte-identical corpora."""

    seed: int
    n_quarters: int
    meetings_per_quarter: int
    meeting_duration_s: float
    participants: tuple[ParticipantSpec, ...]
    suppression: dict[tuple[str, str], float] = field(default_factory=dict)
    tenure_slope: float = 0.0
    start_date: date = date(2021, 1, 1)
    fy_start_month: int = 1
    sample_period_s: float = 5.0
    sample_mode: str = "bernoulli"
    beta_concentration: float = 8.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "participants", tuple(self.participants))
        if self.n_quarters < 1:
            raise ConfigInvalidError(f"n_quarters must be >= 1, got {self.n_quarters}")
        if self.meetings_per_quarter < 1:
            raise ConfigInvalidError(
                f"meetings_per_quarter must be >= 1, got {self.meetings_per_quarter}"
            )
        if self.meeting_duration_s < self.sample_period_s or self.sample_period_s <= 0:
            raise ConfigInvalidError(
                "need 0 < sample_period_s <= meeting_duration_s, got "
                f"period {self.sample_period_s}, duration {self.meeting_duration_s}"
            )
        if not 1 <= self.fy_start_month <= 12:
            raise ConfigInvalidError(
                f"fy_start_month must be in 1..12, got {self.fy_start_month}"
            )
        if not self.participants:
            raise ConfigInvalidError("config declares no participants")
        seen: set[str] = set()
        for spec in self.participants:
            if spec.id in seen:
                raise ConfigInvalidError(f"duplicate participant id {spec.id!r}")
            seen.add(spec.id)
            if not spec.categories:
                raise ConfigInvalidError(f"participant {spec.id!r} has no categories")
            if not 0.0 < spec.base_rate <= 1.0:
                raise ConfigInvalidError(
                    f"participant {spec.id!r}: base_rate must be in (0, 1], "
                    f"got {spec.base_rate}"
                )
            if not 0.0 < spec.attendance_prob <= 1.0:
                raise ConfigInvalidError(
                    f"participant {spec.id!r}: attendance_prob must be in (0, 1], "
                    f"got {spec.attendance_prob}"
                )
        for (target, copresent), multiplier in self.suppression.items():
            if not 0.0 < multiplier <= 2.0:
                raise ConfigInvalidError(
                    f"suppression ({target!r}, {copresent!r}) multiplier must be in "
                    f"(0, 2], got {multiplier}"
                )
        if self.sample_mode not in ("bernoulli", "beta"):
            raise ConfigInvalidError(
                f"sample_mode must be 'bernoulli' or 'beta', got {self.sample_mode!r}"
            )
        if self.beta_concentration <= 0:
            raise ConfigInvalidError(
                f"beta_concentration must be positive, got {self.beta_concentration}"
            )

    def scheme_names(self) -> tuple[str, ...]:
        names: list[str] = []
        for spec in self.participants:
            for scheme in spec.categories:
                if scheme not in names:
                    names.append(scheme)
        return tuple(names)


def _quarter_starts(config: SynthConfig) -> list[date]:
    quarter = quarter_of_date(config.start_date, config.fy_start_month)
    starts = []
    for _ in range(config.n_quarters + 1):
        starts.append(quarter.first_date())
        quarter = quarter.next()
    return starts


def _expected_rate(
    spec: ParticipantSpec,
    others_present: dict[str, set[str]],
    tenure_q: int,
    config: SynthConfig,
) -> float:
    """Planted speech rate: base times co-presence multipliers plus tenure drift."""
    rate = spec.base_rate
    for scheme, own in spec.categories.items():
        for category in others_present.get(scheme, ()):
            rate *= config.suppression.get((own, category), 1.0)
    rate += config.tenure_slope * tenure_q
    return min(1.0, max(0.0, rate))


def generate_corpus(config: SynthConfig) -> tuple[Roster, tuple[Meeting, ...]]:
    """Generate a (roster, meetings) corpus realizing the planted structure.

    Per meeting, each participant hired by the meeting date attends with
    their attendance probability (the draw repeats if nobody attends); each
    attendee's windows are then drawn with mean equal to the planted rate,
    as 0/1 activity in bernoulli mode or a 6-decimal beta ratio otherwise.
    Draw order is participants in declaration order, so the output is a
    pure function of (seed, config).
    """
    rng = SplitMix64(config.seed)
    starts = _quarter_starts(config)
    n_windows = int(config.meeting_duration_s // config.sample_period_s)

    meetings: list[Meeting] = []
    counter = 0
    for qi in range(config.n_quarters):
        span_days = (starts[qi + 1] - starts[qi]).days
        for j in range(config.meetings_per_quarter):
            day = starts[qi] + timedelta(
                days=(j * span_days) // config.meetings_per_quarter
            )
            eligible = [p for p in config.participants if p.hire_date <= day]
            if not eligible:
                raise ConfigInvalidError(
                    f"no participant hired on or before {day.isoformat()}"
                )
            for _ in range(_MAX_ATTENDANCE_RETRIES):
                attendees = [p for p in eligible if rng.bernoulli(p.attendance_prob)]
                if attendees:
                    break
            else:
                raise ConfigInvalidError(
                    "attendance probabilities too low: a meeting drew no attendees "
                    f"{_MAX_ATTENDANCE_RETRIES} times in a row"
                )

            present: dict[str, set[str]] = {}
            for p in attendees:
                for scheme, category in p.categories.items():
                    present.setdefault(scheme, set()).add(category)
            meeting_quarter = quarter_of_date(day, config.fy_start_month)
            tracks: dict[str, SpeechTrack] = {}
            for p in attendees:
                others = {
                    scheme: {
                        q.categories[scheme]
                        for q in attendees
                        if q.id != p.id and scheme in q.categories
                    }
                    for scheme in p.categories
                }
                tenure_q = meeting_quarter.ordinal() - quarter_of_date(
                    p.hire_date, config.fy_start_month
                ).ordinal()
                rate = _expected_rate(p, others, tenure_q, config)
                tracks[p.id] = SpeechTrack(
                    p.id, _draw_samples(rng, rate, n_windows, config), config.sample_period_s
                )
            counter += 1
            meetings.append(
                Meeting(
                    id=f"m{counter:05d}",
                    start=datetime.combine(day, time(9, 0), tzinfo=timezone.utc),
                    duration_s=config.meeting_duration_s,
                    tracks=tracks,
                )
            )

    roster = Roster(
        participants={p.id: Participant(p.id, p.label) for p in config.participants},
        assignments={
            scheme: {
                p.id: ((p.hire_date, p.categories[scheme]),)
                for p in config.participants
                if scheme in p.categories
            }
            for scheme in config.scheme_names()
        },
        hire_dates={p.id: p.hire_date for p in config.participants},
    )
    return roster, tuple(meetings)


def _draw_samples(
    rng: SplitMix64, rate: float, n_windows: int, config: SynthConfig
) -> tuple[float, ...]:
    if config.sample_mode == "bernoulli":
        return tuple(1.0 if rng.bernoulli(rate) else 0.0 for _ in range(n_windows))
    if rate <= 0.0 or rate >= 1.0:
        return tuple(float(rate) for _ in range(n_windows))
    alpha = rate * config.beta_concentration
    beta = (1.0 - rate) * config.beta_concentration
    # Quantized to 6 decimals so the serialized corpus re-reads bit-exactly.
    return tuple(round(rng.beta(alpha, beta), 6) for _ in range(n_windows))


@dataclass(frozen=True)
class ExpectedMetrics:
    """Closed-form ground truth implied by a config.

    ``per_capita_rate`` and ``shares`` assume no suppression or tenure
    drift is planted for the scheme; ``presence_change`` values equal
    multiplier - 1 and hold whenever clamping stays inactive;
    ``tenure_correlation_sign`` is the sign of the planted drift (0 means
    pure noise). When ``clamp_active`` is set, some participant's rate can
    reach 0 or 1 and the closed forms stop being exact.
    """

    per_capita_rate: dict[str, dict[str, float]]
    shares: dict[str, dict[str, float]]
    presence_change: dict[tuple[str, str], float]
    tenure_correlation_sign: int
    clamp_active: bool
    warnings: tuple[str, ...]


def expected_metrics(config: SynthConfig) -> ExpectedMetrics:
    """Ground truth the measured metrics should converge to; see ExpectedMetrics."""
    per_capita: dict[str, dict[str, float]] = {}
    shares: dict[str, dict[str, float]] = {}
    changes: dict[tuple[str, str], float] = {}
    for scheme in config.scheme_names():
        members: dict[str, list[float]] = {}
        for p in config.participants:
            if scheme in p.categories:
                members.setdefault(p.categories[scheme], []).append(p.base_rate)
        per_capita[scheme] = {
            category: sum(rates) / len(rates) for category, rates in members.items()
        }
        total = sum(per_capita[scheme].values())
        shares[scheme] = {
            category: rate / total for category, rate in per_capita[scheme].items()
        }
        for target in members:
            for copresent in members:
                if target != copresent:
                    changes[(target, copresent)] = (
                        config.suppression.get((target, copresent), 1.0) - 1.0
                    )

    slope = config.tenure_slope
    clamp_active = False
    warnings: list[str] = []
    first_ordinal = quarter_of_date(config.start_date, config.fy_start_month).ordinal()
    last_ordinal = first_ordinal + config.n_quarters - 1
    for p in config.participants:
        hire_ordinal = quarter_of_date(p.hire_date, config.fy_start_month).ordinal()
        q_lo = max(0, first_ordinal - hire_ordinal)
        q_hi = max(0, last_ordinal - hire_ordinal)
        shrink = 1.0
        grow = 1.0
        for scheme, own in p.categories.items():
            for other in {
                q.categories[scheme]
                for q in config.participants
                if q.id != p.id and scheme in q.categories
            }:
                multiplier = config.suppression.get((own, other), 1.0)
                if multiplier < 1.0:
                    shrink *= multiplier
                else:
                    grow *= multiplier
        low = p.base_rate * shrink + min(slope * q_lo, slope * q_hi)
        high = p.base_rate * grow + max(slope * q_lo, slope * q_hi)
        if low <= 0.0 or high >= 1.0:
            clamp_active = True
            warnings.append(
                f"participant {p.id!r}: expected rate range "
                f"[{low:.4f}, {high:.4f}] reaches the [0, 1] clamp"
            )

    return ExpectedMetrics(
        per_capita_rate=per_capita,
        shares=shares,
        presence_change=changes,
        tenure_correlation_sign=(slope > 0) - (slope < 0),
        clamp_active=clamp_active,
        warnings=tuple(warnings),
    )


# Scalar config keys: name -> (parser, required). Dates are ISO, numbers plain.
_SCALAR_KEYS = {
    "seed": (int, True),
    "n_quarters": (int, True),
    "meetings_per_quarter": (int, True),
    "meeting_duration_s": (float, True),
    "sample_period_s": (float, False),
    "start_date": (date.fromisoformat, False),
    "fy_start_month": (int, False),
    "tenure_slope": (float, False),
    "sample_mode": (str, False),
    "beta_concentration": (float, False),
}


def parse_synth_config(content: bytes | str) -> SynthConfig:
    """Parse the plain-text config format.

    Top section: ``key = value`` lines. A ``[participants]`` section lists
    one member per line as ``id label hire_date base_rate attendance_prob
    scheme=category ...``; an optional ``[suppression]`` section lists
    ``target copresent multiplier`` rows. ``#`` starts a comment. All
    problems raise ConfigInvalidError with the 1-based line number.
    """
    text = content.decode("utf-8") if isinstance(content, bytes) else content
    scalars: dict[str, object] = {}
    participants: list[ParticipantSpec] = []
    suppression: dict[tuple[str, str], float] = {}
    section = ""

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("participants", "suppression"):
                raise ConfigInvalidError(f"unknown section [{section}]", line=lineno)
            continue
        if section == "":
            if "=" not in line:
                raise ConfigInvalidError(f"expected key = value, got {line!r}", line=lineno)
            key, _, raw_value = line.partition("=")
            key = key.strip()
            raw_value = raw_value.strip()
            if key not in _SCALAR_KEYS:
                raise ConfigInvalidError(f"unknown key {key!r}", line=lineno)
            parser, _ = _SCALAR_KEYS[key]
            try:
                scalars[key] = parser(raw_value)
            except ValueError:
                raise ConfigInvalidError(
                    f"bad value {raw_value!r} for key {key!r}", line=lineno
                ) from None
        elif section == "participants":
            fields = line.split()
            if len(fields) < 6:
                raise ConfigInvalidError(
                    "participant row needs id label hire_date base_rate "
                    "attendance_prob and at least one scheme=category",
                    line=lineno,
                )
            pid, label, hire_raw, base_raw, attend_raw = fields[:5]
            try:
                hire = date.fromisoformat(hire_raw)
                base = float(base_raw)
                attend = float(attend_raw)
            except ValueError as exc:
                raise ConfigInvalidError(str(exc), line=lineno) from None
            if not 0.0 < base <= 1.0:
                raise ConfigInvalidError(
                    f"base_rate must be in (0, 1], got {base}", line=lineno
                )
            if not 0.0 < attend <= 1.0:
                raise ConfigInvalidError(
                    f"attendance_prob must be in (0, 1], got {attend}", line=lineno
                )
            categories: dict[str, str] = {}
            for token in fields[5:]:
                scheme, sep, category = token.partition("=")
                if not sep or not scheme or not category:
                    raise ConfigInvalidError(
                        f"bad scheme=category token {token!r}", line=lineno
                    )
                if scheme in categories:
                    raise ConfigInvalidError(
                        f"scheme {scheme!r} listed twice for {pid!r}", line=lineno
                    )
                categories[scheme] = category
            participants.append(
                ParticipantSpec(pid, categories, hire, base, attend, label)
            )
        else:  # suppression
            fields = line.split()
            if len(fields) != 3:
                raise ConfigInvalidError(
                    f"suppression row needs target copresent multiplier, got {line!r}",
                    line=lineno,
                )
            target, copresent, multiplier_raw = fields
            try:
                multiplier = float(multiplier_raw)
            except ValueError:
                raise ConfigInvalidError(
                    f"bad multiplier {multiplier_raw!r}", line=lineno
                ) from None
            if not 0.0 < multiplier <= 2.0:
                raise ConfigInvalidError(
                    f"multiplier must be in (0, 2], got {multiplier}", line=lineno
                )
            if (target, copresent) in suppression:
                raise ConfigInvalidError(
                    f"duplicate suppression pair {target} {copresent}", line=lineno
                )
            suppression[(target, copresent)] = multiplier

    for key, (_, required) in _SCALAR_KEYS.items():
        if required and key not in scalars:
            raise ConfigInvalidError(f"missing required key {key!r}", line=1)

    try:
        return SynthConfig(
            participants=tuple(participants), suppression=suppression, **scalars
        )
    except ConfigInvalidError:
        raise
    except TypeError as exc:
        raise ConfigInvalidError(str(exc), line=1) from None
