"""Batch ingestion: event files to a deduplicated store, alias resolution,
work-item-to-deployment trace linking, and the reference pull-request adapter.

Partial load is the default posture: a malformed line is reported with its
line number and the rest of the file still loads.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from .model import EventEnvelope, EventKind, EventValidationError, validate_event
from .schema import SCHEMA_VERSION, check_schema_version
from .store import EventStore

QUARANTINE_ID = "developer:unmapped"


class UnmappedAliasError(ValueError):
    """Strict-mode identity resolution hit aliases absent from the map."""

    def __init__(self, aliases: list[str]):
        super().__init__(f"unmapped aliases: {sorted(aliases)}")
        self.aliases = sorted(aliases)


class TraceCycleError(ValueError):
    """Declared links form a cycle; the offending path is attached."""

    def __init__(self, cycle: list[str]):
        super().__init__("cyclic link declaration: " + " -> ".join(cycle))
        self.cycle = cycle


@dataclass(slots=True)
class LoadReport:
    store: EventStore
    duplicate_count: int = 0
    line_errors: list[tuple[int, str]] = field(default_factory=list)

    @property
    def loaded_n(self) -> int:
        return len(self.store)


def load_events(
    source: str | Path | Iterable[str],
    schema_version: int = SCHEMA_VERSION,
    strict: bool = False,
) -> LoadReport:
    """Load a line-delimited JSON event file into a store.

    Each distinct event_id lands exactly once; later duplicates are dropped
    and counted. Invalid lines are reported with their 1-based line number.
    With ``strict`` any invalid line aborts the load.
    """
    check_schema_version(schema_version)
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise FileNotFoundError(f"event file not found: {path}")
        lines: Iterable[str] = path.read_text().splitlines()
    else:
        lines = source

    events: list[EventEnvelope] = []
    seen: set[str] = set()
    duplicates = 0
    errors: list[tuple[int, str]] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            errors.append((lineno, f"invalid JSON: {exc.msg}"))
            continue
        try:
            envelope = validate_event(raw)
        except EventValidationError as exc:
            errors.append((lineno, "; ".join(exc.errors)))
            continue
        if envelope.event_id in seen:
            duplicates += 1
            continue
        seen.add(envelope.event_id)
        events.append(envelope)

    if strict and errors:
        lineno, msg = errors[0]
        raise EventValidationError([f"line {lineno}: {msg}"])
    return LoadReport(store=EventStore(events), duplicate_count=duplicates, line_errors=errors)


def load_alias_map(path: str | Path) -> dict[str, str]:
    """Read the ``raw_alias,developer_id`` CSV."""
    mapping: dict[str, str] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"raw_alias", "developer_id"}:
            raise ValueError("alias map must have header raw_alias,developer_id")
        for row in reader:
            mapping[row["raw_alias"]] = row["developer_id"]
    return mapping


@dataclass(slots=True)
class IdentityReport:
    events: list[EventEnvelope]
    quarantined_count: int = 0
    quarantined_aliases: set[str] = field(default_factory=set)


def resolve_identities(
    events: Iterable[EventEnvelope],
    alias_map: Mapping[str, str],
    strict: bool = True,
) -> IdentityReport:
    """Rewrite raw actor aliases to canonical developer ids.

    Canonical ids pass through untouched (identity mapping). Unmapped aliases
    fail in strict mode; otherwise they are bucketed under a quarantine id and
    counted so the gap is visible, not silent.
    """
    resolved: list[EventEnvelope] = []
    unmapped: set[str] = set()
    quarantined = 0
    known = set(alias_map.values())
    for ev in events:
        actor = ev.actor_id
        if actor is None or actor in known:
            resolved.append(ev)
            continue
        if actor in alias_map:
            resolved.append(ev.with_actor(alias_map[actor]))
        elif strict:
            unmapped.add(actor)
        else:
            unmapped.add(actor)
            quarantined += 1
            resolved.append(ev.with_actor(QUARANTINE_ID))
    if strict and unmapped:
        raise UnmappedAliasError(sorted(unmapped))
    return IdentityReport(events=resolved, quarantined_count=quarantined, quarantined_aliases=unmapped)


@dataclass(frozen=True, slots=True)
class TraceGraph:
    """Linkage from work items through PRs to customer-reaching deployments.

    ``item_to_prs`` and ``pr_to_deployments`` are the edges; orphans and
    dangling nodes are listed, never dropped.
    """

    item_to_prs: Mapping[str, tuple[str, ...]]
    pr_to_deployments: Mapping[str, tuple[str, ...]]
    item_to_deployments: Mapping[str, tuple[str, ...]]
    orphan_prs: tuple[str, ...]
    dangling_items: tuple[str, ...]

    @property
    def edge_count(self) -> int:
        return sum(len(v) for v in self.item_to_prs.values()) + sum(
            len(v) for v in self.pr_to_deployments.values()
        )


def _detect_cycle(edges: Mapping[str, set[str]]) -> list[str] | None:
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[str, int] = defaultdict(int)
    parent: dict[str, str] = {}

    for root in sorted(edges):
        if color[root] != WHITE:
            continue
        stack = [(root, iter(sorted(edges.get(root, ()))))]
        color[root] = GRAY
        while stack:
            node, children = stack[-1]
            advanced = False
            for child in children:
                if color[child] == GRAY:
                    cycle = [child, node]
                    cur = node
                    while cur != child:
                        cur = parent[cur]
                        cycle.append(cur)
                    cycle.reverse()
                    return cycle
                if color[child] == WHITE:
                    color[child] = GRAY
                    parent[child] = node
                    stack.append((child, iter(sorted(edges.get(child, ())))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()
    return None


def link_trace(store: EventStore) -> TraceGraph:
    """Build the work_item -> pr -> deployment graph from declared link fields.

    PRs point at items via linked_item_id; deployments attach to every work
    item declaring the same feature id. A cyclic declaration (possible when
    ids are reused across link fields) is rejected with the cycle path.
    """
    item_created: dict[str, Any] = {}
    item_feature: dict[str, str] = {}
    for ev in store.by_kind(EventKind.WORK_ITEM):
        item_id = ev.payload["item_id"]
        if item_id not in item_created:
            item_created[item_id] = ev.payload["created_at"]
            feature = ev.payload.get("linked_feature_id")
            if feature is not None:
                item_feature[item_id] = feature

    deployments_by_feature: dict[str, list[str]] = defaultdict(list)
    for ev in store.by_kind(EventKind.DEPLOYMENT):
        deployments_by_feature[ev.payload["feature_id"]].append(ev.event_id)

    item_to_prs: dict[str, list[str]] = defaultdict(list)
    orphans: list[str] = []
    pr_ids: set[str] = set()
    link_edges: dict[str, set[str]] = defaultdict(set)
    for ev in store.by_kind(EventKind.PR):
        pr_id = ev.payload["pr_id"]
        pr_ids.add(pr_id)
        linked = ev.payload.get("linked_item_id")
        if linked is None:
            orphans.append(pr_id)
        else:
            link_edges[linked].add(pr_id)
            if linked in item_created:
                item_to_prs[linked].append(pr_id)
            else:
                orphans.append(pr_id)

    cycle = _detect_cycle(link_edges)
    if cycle is not None:
        raise TraceCycleError(cycle)

    item_to_deployments: dict[str, tuple[str, ...]] = {}
    pr_to_deployments: dict[str, tuple[str, ...]] = {}
    dangling: list[str] = []
    for item_id in item_created:
        feature = item_feature.get(item_id)
        deployed = tuple(deployments_by_feature.get(feature, ())) if feature else ()
        if deployed:
            item_to_deployments[item_id] = deployed
            for pr_id in item_to_prs.get(item_id, ()):
                pr_to_deployments[pr_id] = deployed
        else:
            dangling.append(item_id)

    return TraceGraph(
        item_to_prs={k: tuple(v) for k, v in item_to_prs.items()},
        pr_to_deployments=pr_to_deployments,
        item_to_deployments=item_to_deployments,
        orphan_prs=tuple(sorted(set(orphans))),
        dangling_items=tuple(sorted(dangling)),
    )


@dataclass(slots=True)
class AdapterReport:
    envelope: EventEnvelope | None
    skipped: bool = False
    warning: str | None = None


def adapt_external_pr_payload(
    payload: Mapping[str, Any],
    team_id: str,
    event_id_prefix: str = "extpr",
) -> AdapterReport:
    """Map the reference code-host pull-request record onto a pr envelope.

    Merged PRs arrive with merged_at set; closed-without-merge becomes an
    abandoned PR. Any other action is skipped with a warning so callers can
    count what the connector ignored.
    """
    action = payload.get("action")
    if action != "closed":
        return AdapterReport(envelope=None, skipped=True, warning=f"action {action!r} ignored")

    pull = payload.get("pull_request", {})
    number = payload.get("number")
    created_at = pull.get("created_at")
    if created_at is None:
        raise EventValidationError(["pull_request.created_at required"])
    merged_at = pull.get("merged_at")
    closed_at = pull.get("closed_at")
    user = pull.get("user", {}) or {}

    pr_payload: dict[str, Any] = {
        "pr_id": f"{event_id_prefix}-{number}",
        "created_at": created_at,
        "abandoned": merged_at is None,
    }
    if merged_at is not None:
        pr_payload["merged_at"] = merged_at

    envelope = validate_event(
        {
            "event_id": f"{event_id_prefix}-{number}",
            "kind": "pr",
            "timestamp": merged_at or closed_at or created_at,
            "team_id": team_id,
            "actor_id": str(user.get("id")) if user.get("id") is not None else None,
            "payload": pr_payload,
        }
    )
    return AdapterReport(envelope=envelope)
