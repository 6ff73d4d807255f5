"""Canonical data model: org hierarchy, event envelope, typed payloads, metric results.

Every other module consumes these types. Envelopes are immutable after
validation and all instants are UTC, so values can be shared freely across
workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from enum import Enum
from typing import Any, Mapping

UTC = timezone.utc


class EventKind(str, Enum):
    WORK_ITEM = "work_item"
    PR = "pr"
    BUILD = "build"
    DEPLOYMENT = "deployment"
    INCIDENT = "incident"
    MEETING = "meeting"
    COMPLIANCE_TASK = "compliance_task"
    INTERRUPT = "interrupt"


class Dimension(str, Enum):
    SPEED = "speed"
    EASE = "ease"
    QUALITY = "quality"
    THRIVING = "thriving"


class Classification(str, Enum):
    OUTCOME = "outcome"
    ACTIVITY = "activity"


MEETING_TYPES = ("status", "one_on_one", "design", "other")


class EventValidationError(ValueError):
    """Raised when a raw record cannot become a well-formed envelope.

    Carries field-level messages; the record is never partially accepted.
    """

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class EmptyScopeError(ValueError):
    """A metric was requested over a scope containing no developers."""


@dataclass(frozen=True, slots=True)
class Developer:
    developer_id: str
    hire_date: date
    team_id: str
    is_ic: bool = True
    leave_days: frozenset[date] = field(default_factory=frozenset)


@dataclass(frozen=True, slots=True)
class OrgNode:
    node_id: str
    parent_id: str | None
    kind: str  # "org" | "team"
    name: str


@dataclass(frozen=True, slots=True)
class WorkdayConfig:
    """Working-day frame used by focus sessionization and bad-day evaluation.

    Hours are offsets from the day's midnight UTC plus ``utc_offset_hours``
    for teams whose local day is shifted.
    """

    start_hour: float = 9.0
    end_hour: float = 17.0
    utc_offset_hours: float = 0.0

    @property
    def length_hours(self) -> float:
        return self.end_hour - self.start_hour

    def interval_on(self, day: date) -> tuple[datetime, datetime]:
        midnight = datetime(day.year, day.month, day.day, tzinfo=UTC)
        shift = timedelta(hours=-self.utc_offset_hours)
        return (
            midnight + timedelta(hours=self.start_hour) + shift,
            midnight + timedelta(hours=self.end_hour) + shift,
        )


@dataclass(frozen=True, slots=True)
class TimeWindow:
    """Half-open [start, end) date range with day or week granularity."""

    start: date
    end: date
    granularity: str = "week"

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError(f"window start {self.start} must precede end {self.end}")
        if self.granularity not in ("day", "week"):
            raise ValueError(f"unknown granularity {self.granularity!r}")

    @property
    def days(self) -> int:
        return (self.end - self.start).days

    @property
    def weeks(self) -> float:
        return self.days / 7.0

    def contains(self, ts: datetime) -> bool:
        return self.start_dt <= ts < self.end_dt

    @property
    def start_dt(self) -> datetime:
        return datetime(self.start.year, self.start.month, self.start.day, tzinfo=UTC)

    @property
    def end_dt(self) -> datetime:
        return datetime(self.end.year, self.end.month, self.end.day, tzinfo=UTC)

    def iter_days(self):
        d = self.start
        while d < self.end:
            yield d
            d += timedelta(days=1)

    def iter_weeks(self):
        """Yield (week_start, week_end) pairs of 7-day slices, last may be short."""
        d = self.start
        while d < self.end:
            nxt = min(d + timedelta(days=7), self.end)
            yield d, nxt
            d = nxt

    def week_index(self, ts: datetime) -> int:
        return (ts.date() - self.start).days // 7


@dataclass(frozen=True, slots=True)
class EventEnvelope:
    """One timestamped, typed telemetry fact attributed to a developer and team."""

    event_id: str
    kind: EventKind
    timestamp: datetime
    team_id: str
    payload: Mapping[str, Any]
    actor_id: str | None = None

    def with_actor(self, actor_id: str) -> EventEnvelope:
        return EventEnvelope(
            event_id=self.event_id,
            kind=self.kind,
            timestamp=self.timestamp,
            team_id=self.team_id,
            payload=self.payload,
            actor_id=actor_id,
        )

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "event_id": self.event_id,
            "kind": self.kind.value,
            "timestamp": format_instant(self.timestamp),
            "team_id": self.team_id,
            "payload": _payload_record(self.payload),
        }
        if self.actor_id is not None:
            rec["actor_id"] = self.actor_id
        return rec


def _payload_record(payload: Mapping[str, Any]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in payload.items():
        if isinstance(value, datetime):
            out[key] = format_instant(value)
        else:
            out[key] = value
    return out


@dataclass(frozen=True, slots=True)
class MetricResult:
    """A computed metric value plus the metadata every consumer must see.

    ``suppressed`` results carry no value: k-anonymity hides both the number
    and its decomposition.
    """

    metric_id: str
    dimension: Dimension
    classification: Classification
    unit: str
    value: float | None
    population_n: int
    suppressed: bool = False
    decomposition: Mapping[str, Any] | None = None

    def __post_init__(self) -> None:
        if self.suppressed and self.value is not None:
            raise ValueError("suppressed results must not carry a value")
        if self.population_n < 0:
            raise ValueError("population_n must be >= 0")

    def to_record(self) -> dict[str, Any]:
        if self.suppressed:
            return {
                "metric_id": self.metric_id,
                "dimension": self.dimension.value,
                "classification": self.classification.value,
                "suppressed": True,
                "reason": "k-anonymity",
                "population_n": self.population_n,
            }
        rec: dict[str, Any] = {
            "metric_id": self.metric_id,
            "dimension": self.dimension.value,
            "classification": self.classification.value,
            "unit": self.unit,
            "value": self.value,
            "population_n": self.population_n,
            "suppressed": False,
        }
        if self.decomposition is not None:
            rec["decomposition"] = dict(self.decomposition)
        return rec


def parse_instant(raw: Any, field_name: str = "timestamp") -> datetime:
    """Parse an RFC 3339 instant and normalize it to UTC.

    Naive datetimes are rejected: downstream duration math assumes every
    instant is absolute.
    """
    if isinstance(raw, datetime):
        if raw.tzinfo is None:
            raise EventValidationError([f"{field_name} must be timezone-aware UTC"])
        return raw.astimezone(UTC)
    if not isinstance(raw, str):
        raise EventValidationError([f"{field_name} must be an RFC 3339 string"])
    text = raw[:-1] + "+00:00" if raw.endswith("Z") else raw
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError:
        raise EventValidationError([f"{field_name} is not a valid RFC 3339 instant: {raw!r}"]) from None
    if parsed.tzinfo is None:
        raise EventValidationError([f"{field_name} must carry a UTC offset: {raw!r}"])
    return parsed.astimezone(UTC)


def format_instant(ts: datetime) -> str:
    return ts.astimezone(UTC).isoformat().replace("+00:00", "Z")


# Required / optional payload fields per kind. This mirrors the versioned
# schema document in schema.py; validate_event enforces it.
_PAYLOAD_FIELDS: dict[EventKind, tuple[tuple[str, ...], tuple[str, ...]]] = {
    EventKind.WORK_ITEM: (("item_id", "created_at"), ("linked_feature_id",)),
    EventKind.PR: (("pr_id", "created_at"), ("merged_at", "abandoned", "linked_item_id")),
    EventKind.BUILD: (("duration_s", "failed"), ()),
    EventKind.DEPLOYMENT: (("feature_id", "reached_customers_at"), ()),
    EventKind.INCIDENT: (
        ("incident_id", "detected_at"),
        ("mitigated_at", "responder_ids", "response_hours_by_responder"),
    ),
    EventKind.MEETING: (("start", "end", "meeting_type", "attendee_ids"), ("multitask_flag",)),
    EventKind.COMPLIANCE_TASK: (("hours",), ()),
    EventKind.INTERRUPT: (("instant",), ()),
}

_INSTANT_PAYLOAD_FIELDS = {
    "created_at", "merged_at", "reached_customers_at", "detected_at",
    "mitigated_at", "start", "end", "instant",
}


def _validate_payload(kind: EventKind, raw: Mapping[str, Any], errors: list[str]) -> dict[str, Any]:
    required, optional = _PAYLOAD_FIELDS[kind]
    allowed = set(required) | set(optional)
    payload: dict[str, Any] = {}

    for name in required:
        if raw.get(name) is None:
            errors.append(f"payload.{name} required for kind {kind.value}")
    for name, value in raw.items():
        if name not in allowed:
            errors.append(f"payload.{name} not allowed for kind {kind.value}")
            continue
        if value is None:
            continue
        if name in _INSTANT_PAYLOAD_FIELDS:
            try:
                payload[name] = parse_instant(value, f"payload.{name}")
            except EventValidationError as exc:
                errors.extend(exc.errors)
        else:
            payload[name] = value
    if errors:
        return payload

    if kind is EventKind.PR:
        payload.setdefault("abandoned", False)
        if not isinstance(payload["abandoned"], bool):
            errors.append("payload.abandoned must be a boolean")
        merged = payload.get("merged_at")
        if merged is not None and merged < payload["created_at"]:
            errors.append("non-monotonic pr timestamps: merged_at precedes created_at")
    elif kind is EventKind.BUILD:
        if not isinstance(payload["duration_s"], (int, float)) or payload["duration_s"] < 0:
            errors.append("payload.duration_s must be a non-negative number")
        if not isinstance(payload["failed"], bool):
            errors.append("payload.failed must be a boolean")
    elif kind is EventKind.INCIDENT:
        mitigated = payload.get("mitigated_at")
        if mitigated is not None and mitigated < payload["detected_at"]:
            errors.append("non-monotonic incident timestamps: mitigated_at precedes detected_at")
        responders = payload.setdefault("responder_ids", [])
        if not isinstance(responders, (list, tuple)):
            errors.append("payload.responder_ids must be a list")
        hours = payload.setdefault("response_hours_by_responder", {})
        if isinstance(hours, Mapping):
            for rid, h in hours.items():
                if not isinstance(h, (int, float)) or h < 0:
                    errors.append(f"payload.response_hours_by_responder[{rid}] must be >= 0")
        else:
            errors.append("payload.response_hours_by_responder must be a mapping")
    elif kind is EventKind.MEETING:
        if payload["meeting_type"] not in MEETING_TYPES:
            errors.append(
                f"payload.meeting_type must be one of {MEETING_TYPES}, got {payload['meeting_type']!r}"
            )
        elif payload["end"] <= payload["start"]:
            errors.append("meeting end must be after start")
        if not isinstance(payload["attendee_ids"], (list, tuple)):
            errors.append("payload.attendee_ids must be a list")
        flag = payload.setdefault("multitask_flag", False)
        if not isinstance(flag, bool):
            errors.append("payload.multitask_flag must be a boolean")
    elif kind is EventKind.COMPLIANCE_TASK:
        if not isinstance(payload["hours"], (int, float)) or payload["hours"] < 0:
            errors.append("payload.hours must be >= 0")

    return payload


def validate_event(raw: Mapping[str, Any]) -> EventEnvelope:
    """Turn a structurally parsed record into a validated envelope.

    Raises EventValidationError with every field-level problem found; a
    record is accepted whole or not at all.
    """
    errors: list[str] = []

    event_id = raw.get("event_id")
    if not event_id or not isinstance(event_id, str):
        errors.append("event_id required")

    kind_raw = raw.get("kind")
    kind: EventKind | None = None
    if kind_raw is None:
        errors.append("kind required")
    else:
        try:
            kind = EventKind(kind_raw)
        except ValueError:
            errors.append(f"unknown kind {kind_raw!r}")

    timestamp: datetime | None = None
    if raw.get("timestamp") is None:
        errors.append("timestamp required")
    else:
        try:
            timestamp = parse_instant(raw["timestamp"])
        except EventValidationError as exc:
            errors.extend(exc.errors)

    team_id = raw.get("team_id")
    if not team_id or not isinstance(team_id, str):
        errors.append("team_id required")

    actor_id = raw.get("actor_id")
    if actor_id is not None and not isinstance(actor_id, str):
        errors.append("actor_id must be a string when present")

    payload_raw = raw.get("payload")
    payload: dict[str, Any] = {}
    if not isinstance(payload_raw, Mapping):
        errors.append("payload required")
    elif kind is not None:
        payload = _validate_payload(kind, payload_raw, errors)

    unknown_top = set(raw) - {"event_id", "kind", "timestamp", "team_id", "actor_id", "payload"}
    if unknown_top:
        errors.append(f"unknown envelope fields: {sorted(unknown_top)}")

    if errors:
        raise EventValidationError(errors)

    assert kind is not None and timestamp is not None
    return EventEnvelope(
        event_id=str(event_id),
        kind=kind,
        timestamp=timestamp,
        team_id=str(team_id),
        payload=payload,
        actor_id=actor_id,
    )
