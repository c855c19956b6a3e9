"""orgpulse: meeting speech-amount analytics.

Ingests per-participant meeting speech tracks plus an attribute roster and
computes per-category speech shares against an ideal distribution,
presence/absence power-relation matrices, and the tenure vs speech-rate
correlation, aggregated by fiscal quarter.
"""

from .errors import OrgPulseError
from .ingest import (
    CorpusValidationReport,
    Finding,
    parse_meetings,
    parse_roster,
    validate_corpus,
    write_corpus,
)
from .metrics import (
    NotApplicable,
    PresenceMatrix,
    QuarterBucket,
    ShareReport,
    TenurePoint,
    bucket_by_quarter,
    pearson_r,
    per_capita_speech,
    presence_change,
    presence_matrix,
    share_report,
    tenure_points,
)
from .model import (
    AttributeScheme,
    Meeting,
    Participant,
    Quarter,
    Roster,
    SpeechTrack,
    attribute_of,
    quarter_of_date,
    tenure_quarters,
    total_speech_seconds,
)
from .synthgen import (
    ExpectedMetrics,
    ParticipantSpec,
    SynthConfig,
    expected_metrics,
    generate_corpus,
    parse_synth_config,
)

__version__ = "0.1.0"

__all__ = [
    "AttributeScheme",
    "CorpusValidationReport",
    "ExpectedMetrics",
    "Finding",
    "Meeting",
    "NotApplicable",
    "OrgPulseError",
    "Participant",
    "ParticipantSpec",
    "PresenceMatrix",
    "Quarter",
    "QuarterBucket",
    "Roster",
    "ShareReport",
    "SpeechTrack",
    "SynthConfig",
    "TenurePoint",
    "attribute_of",
    "bucket_by_quarter",
    "expected_metrics",
    "generate_corpus",
    "parse_meetings",
    "parse_roster",
    "parse_synth_config",
    "pearson_r",
    "per_capita_speech",
    "presence_change",
    "presence_matrix",
    "quarter_of_date",
    "share_report",
    "tenure_points",
    "tenure_quarters",
    "total_speech_seconds",
    "validate_corpus",
    "write_corpus",
]
