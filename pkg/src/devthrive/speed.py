"""Speed dimension: idea-to-customer, time-to-nth-PR, PR completion time,
and PR velocity (the lone activity submetric here).

All duration metrics assign window membership by the completion event so a
unit of work is counted in exactly one window.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import timedelta

from .distributions import DurationDistribution
from .ingest import TraceGraph
from .model import (
    Classification,
    Dimension,
    EmptyScopeError,
    EventKind,
    MetricResult,
    TimeWindow,
)
from .store import EventStore

HOURS = 3600.0
DAYS = 86400.0

FIRST_PR_TARGET_DAYS = 7.0


def _require_scope(developer_ids: set[str]) -> None:
    if not developer_ids:
        raise EmptyScopeError("scope contains no developers")


def idea_to_customer(
    store: EventStore,
    traces: TraceGraph,
    scope_team_ids: set[str],
    scope_developer_ids: set[str],
    window: TimeWindow,
) -> MetricResult:
    """Days from a work item's creation to its first customer-reaching deployment.

    One sample per complete trace whose (earliest) deployment falls in the
    window; items without a deployment by window end count as in flight.
    """
    _require_scope(scope_developer_ids)
    item_created = {}
    item_team = {}
    for ev in store.by_kind(EventKind.WORK_ITEM):
        item_id = ev.payload["item_id"]
        if item_id not in item_created:
            item_created[item_id] = ev.payload["created_at"]
            item_team[item_id] = ev.team_id

    deploy_time = {
        ev.event_id: ev.payload["reached_customers_at"]
        for ev in store.by_kind(EventKind.DEPLOYMENT)
    }

    samples: list[float] = []
    in_flight = 0
    for item_id, created in item_created.items():
        if item_team.get(item_id) not in scope_team_ids:
            continue
        deployments = traces.item_to_deployments.get(item_id, ())
        reached = min((deploy_time[d] for d in deployments if d in deploy_time), default=None)
        if reached is None or reached >= window.end_dt:
            if created < window.end_dt:
                in_flight += 1
            continue
        if window.contains(reached):
            samples.append((reached - created).total_seconds() / DAYS)

    dist = DurationDistribution.from_samples(samples, in_flight_n=in_flight)
    return MetricResult(
        metric_id="speed.i2c",
        dimension=Dimension.SPEED,
        classification=Classification.OUTCOME,
        unit="days",
        value=dist.median,
        population_n=len(scope_developer_ids),
        decomposition=dist.to_record(),
    )


@dataclass(frozen=True, slots=True)
class NthPrResult:
    per_developer_days: dict[str, float]
    not_yet_reached: tuple[str, ...]
    distribution: DurationDistribution
    n: int
    target_days: float | None
    target_met_share: float | None


def time_to_nth_pr(store: EventStore, cohort: dict[str, "date"], n: int) -> NthPrResult:
    """Calendar days from hire to each developer's nth merged PR.

    ``cohort`` maps developer_id to hire_date. Developers with fewer than n
    merged PRs are reported as not yet reached. For n=1 the result carries
    the seven-day onboarding target.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    merged_by_dev: dict[str, list] = {dev: [] for dev in cohort}
    for ev in store.by_kind(EventKind.PR):
        merged = ev.payload.get("merged_at")
        if merged is None or ev.actor_id not in merged_by_dev:
            continue
        merged_by_dev[ev.actor_id].append(merged)

    per_dev: dict[str, float] = {}
    not_reached: list[str] = []
    for dev, hire in cohort.items():
        merges = sorted(merged_by_dev[dev])
        if len(merges) < n:
            not_reached.append(dev)
            continue
        hire_dt = _date_to_dt(hire)
        per_dev[dev] = (merges[n - 1] - hire_dt).total_seconds() / DAYS

    dist = DurationDistribution.from_samples(list(per_dev.values()), in_flight_n=len(not_reached))
    target = FIRST_PR_TARGET_DAYS if n == 1 else None
    met = None
    if target is not None and per_dev:
        met = sum(1 for d in per_dev.values() if d <= target) / len(cohort)
    return NthPrResult(
        per_developer_days=per_dev,
        not_yet_reached=tuple(sorted(not_reached)),
        distribution=dist,
        n=n,
        target_days=target,
        target_met_share=met,
    )


def _date_to_dt(day):
    from datetime import datetime

    from .model import UTC

    return datetime(day.year, day.month, day.day, tzinfo=UTC)


def time_to_nth_pr_metric(store: EventStore, cohort: dict[str, "date"], n: int) -> MetricResult:
    res = time_to_nth_pr(store, cohort, n)
    decomposition = res.distribution.to_record()
    decomposition["n"] = n
    if res.target_days is not None:
        decomposition["target_days"] = res.target_days
        decomposition["target_met_share"] = res.target_met_share
    return MetricResult(
        metric_id="speed.time_to_nth_pr",
        dimension=Dimension.SPEED,
        classification=Classification.OUTCOME,
        unit="days",
        value=res.distribution.median,
        population_n=len(cohort),
        decomposition=decomposition,
    )


def pr_completion_time(
    store: EventStore,
    scope_developer_ids: set[str],
    window: TimeWindow,
) -> MetricResult:
    """Hours from PR creation to merge, one sample per PR merged in the window.

    Abandoned PRs never contribute a duration; they are counted separately.
    """
    _require_scope(scope_developer_ids)
    samples: list[float] = []
    abandoned = 0
    in_flight = 0
    for ev in store.by_kind(EventKind.PR):
        if ev.actor_id not in scope_developer_ids:
            continue
        created = ev.payload["created_at"]
        merged = ev.payload.get("merged_at")
        if ev.payload.get("abandoned"):
            abandoned += 1
            continue
        if merged is None:
            if created < window.end_dt:
                in_flight += 1
            continue
        if window.contains(merged):
            samples.append((merged - created).total_seconds() / HOURS)

    dist = DurationDistribution.from_samples(samples, in_flight_n=in_flight)
    decomposition = dist.to_record()
    decomposition["abandoned_n"] = abandoned
    return MetricResult(
        metric_id="speed.pr_completion",
        dimension=Dimension.SPEED,
        classification=Classification.OUTCOME,
        unit="hours",
        value=dist.median,
        population_n=len(scope_developer_ids),
        decomposition=decomposition,
    )


def pr_velocity(
    store: EventStore,
    scope_developer_ids: set[str],
    window: TimeWindow,
) -> MetricResult:
    """Merged PRs per developer-week. Activity: motion, not progress."""
    _require_scope(scope_developer_ids)
    merged_n = 0
    for ev in store.by_kind(EventKind.PR):
        if ev.actor_id not in scope_developer_ids:
            continue
        merged = ev.payload.get("merged_at")
        if merged is not None and window.contains(merged):
            merged_n += 1
    value = merged_n / (len(scope_developer_ids) * window.weeks)
    return MetricResult(
        metric_id="speed.pr_velocity",
        dimension=Dimension.SPEED,
        classification=Classification.ACTIVITY,
        unit="prs/dev-week",
        value=value,
        population_n=len(scope_developer_ids),
        decomposition={"merged_n": merged_n, "weeks": window.weeks},
    )
