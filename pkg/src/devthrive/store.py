"""Deduplicated, frozen event store with the indexes metric code leans on."""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from collections import defaultdict
from datetime import date, datetime
from typing import Iterable, Iterator

from .model import EventEnvelope, EventKind


class EventStore:
    """Timestamp-ordered collection of envelopes, frozen after construction.

    Iteration order is (timestamp, event_id) ascending. One event_id appears
    at most once; duplicates must be dropped by the loader before this point.
    """

    def __init__(self, events: Iterable[EventEnvelope]):
        ordered = sorted(events, key=lambda e: (e.timestamp, e.event_id))
        seen: set[str] = set()
        for ev in ordered:
            if ev.event_id in seen:
                raise ValueError(f"duplicate event_id in store: {ev.event_id}")
            seen.add(ev.event_id)
        self._events: tuple[EventEnvelope, ...] = tuple(ordered)
        self._by_kind: dict[EventKind, list[EventEnvelope]] = defaultdict(list)
        self._by_actor: dict[str, list[EventEnvelope]] = defaultdict(list)
        self._by_team: dict[str, list[EventEnvelope]] = defaultdict(list)
        self._by_day: dict[date, list[EventEnvelope]] = defaultdict(list)
        for ev in self._events:
            self._by_kind[ev.kind].append(ev)
            if ev.actor_id is not None:
                self._by_actor[ev.actor_id].append(ev)
            self._by_team[ev.team_id].append(ev)
            self._by_day[ev.timestamp.date()].append(ev)
        self._kind_timestamps: dict[EventKind, list[datetime]] = {
            kind: [e.timestamp for e in evs] for kind, evs in self._by_kind.items()
        }

    def __iter__(self) -> Iterator[EventEnvelope]:
        return iter(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventStore):
            return NotImplemented
        return self._events == other._events

    def __hash__(self) -> int:  # stores are compared, not hashed
        raise TypeError("EventStore is unhashable")

    @property
    def events(self) -> tuple[EventEnvelope, ...]:
        return self._events

    def by_kind(self, kind: EventKind) -> list[EventEnvelope]:
        return self._by_kind.get(kind, [])

    def by_actor(self, actor_id: str) -> list[EventEnvelope]:
        return self._by_actor.get(actor_id, [])

    def by_team(self, team_id: str) -> list[EventEnvelope]:
        return self._by_team.get(team_id, [])

    def by_day(self, day: date) -> list[EventEnvelope]:
        return self._by_day.get(day, [])

    def kind_between(self, kind: EventKind, start: datetime, end: datetime) -> list[EventEnvelope]:
        """Events of ``kind`` with start <= timestamp < end."""
        evs = self._by_kind.get(kind)
        if not evs:
            return []
        stamps = self._kind_timestamps[kind]
        lo = bisect_left(stamps, start)
        hi = bisect_right(stamps, end)
        return [e for e in evs[lo:hi] if start <= e.timestamp < end]

    def actor_events_on(self, actor_id: str, day: date) -> list[EventEnvelope]:
        return [e for e in self._by_actor.get(actor_id, []) if e.timestamp.date() == day]
