"""Interval-scheduled function execution over database query results.

Observation targets live in the observation_target table. Each carries an
SQL query, an interval in seconds, and the function to run. On every due
tick the query runs against the store and the function is invoked once per
result row, on the entity named by the row's mandatory ``entity`` column.
Functions are run through the HTTP API so that the serving process stays
the single writer of the model.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass
from typing import Callable, Optional

import requests

from .errors import SqlError, StoreError, WriteAttempted
from .store import Store

log = logging.getLogger(__name__)

DEFAULT_REFRESH_SECONDS = 60
DEFAULT_TICK_SECONDS = 1


@dataclass
class ObservationTarget:
    id: int
    query: str
    interval_seconds: int
    function: int
    parent_reference: Optional[int]
    next_due: float


@dataclass(frozen=True)
class Invocation:
    target: int
    entity: int
    success: bool


# runner(function_entity, subject_entity, parent_reference) -> success flag
Runner = Callable[[int, int, Optional[int]], bool]


class Clock:
    """Wall clock; swapped for a simulated clock in tests."""

    def now(self) -> float:
        return time.time()

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)


class DatapiRunner:
    """Runs functions through the HTTP API's run endpoint."""

    def __init__(self, base_url: str, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = requests.Session()

    def __call__(self, function_entity: int, subject: int,
                 parent_reference: Optional[int]) -> bool:
        url = f"{self.base_url}/api/entities/{subject}/run/{function_entity}"
        params = {}
        if parent_reference is not None:
            params["parent_reference"] = parent_reference
        try:
            resp = self.session.post(url, params=params, timeout=self.timeout)
        except requests.RequestException as exc:
            log.warning("run request for function %s on entity %s failed: %s",
                        function_entity, subject, exc)
            return False
        return resp.status_code == 200


def load_observation_targets(store: Store, now: float) -> list[ObservationTarget]:
    """Fetch all observation targets; rows with a non-positive interval are
    skipped with a warning. next_due starts at load time."""
    rows = store.raw_query(
        f"SELECT id, query, interval_seconds, function, parent_reference "
        f"FROM {store.schema}.observation_target ORDER BY id")
    targets: list[ObservationTarget] = []
    for row in rows:
        interval = row["interval_seconds"]
        if interval is None or interval < 1:
            log.warning("observation target %s has interval %r; skipped",
                        row["id"], interval)
            continue
        targets.append(ObservationTarget(row["id"], row["query"] or "", interval,
                                         row["function"], row["parent_reference"], now))
    return targets


def refresh_targets(store: Store, now: float,
                    existing: list[ObservationTarget]) -> list[ObservationTarget]:
    """Reload the target table, keeping the schedule of targets already known."""
    known = {t.id: t for t in existing}
    fresh = load_observation_targets(store, now)
    for t in fresh:
        if t.id in known:
            t.next_due = known[t.id].next_due
    return fresh


def observer_tick(now: float, targets: list[ObservationTarget], store: Store,
                  runner: Runner) -> list[Invocation]:
    """Run every due target once; rows without an entity column are skipped
    and logged, a failing query skips the target for this interval."""
    invocations: list[Invocation] = []
    for target in targets:
        if target.next_due > now:
            continue
        target.next_due = now + target.interval_seconds
        try:
            rows = store.raw_query(target.query)
        except (SqlError, WriteAttempted) as exc:
            log.warning("observation target %s query failed: %s", target.id, exc)
            _log_to_store(store, "warning",
                          f"observation target {target.id} query failed: {exc}")
            continue
        for row in rows:
            if "entity" not in row or row["entity"] is None:
                log.warning("observation target %s returned a row without the "
                            "mandatory entity column", target.id)
                _log_to_store(store, "warning",
                              f"MissingEntityColumn: observation target {target.id} "
                              "row lacks the mandatory entity column")
                continue
            entity = int(row["entity"])
            ok = runner(target.function, entity, target.parent_reference)
            invocations.append(Invocation(target.id, entity, ok))
    return invocations


def _log_to_store(store: Store, level: str, message: str) -> None:
    try:
        store.record_log("observer", level,
                         time.strftime("%Y-%m-%dT%H:%M:%S"), message)
    except StoreError:
        log.debug("log record could not be stored", exc_info=True)


def observer_loop(store: Store, runner: Runner, clock: Optional[Clock] = None,
                  refresh_seconds: Optional[int] = None,
                  tick_seconds: Optional[int] = None,
                  max_ticks: Optional[int] = None) -> list[Invocation]:
    """Sequential observer worker; ticks never overlap, a long tick delays
    the next. Returns only when max_ticks is set (test harnesses) or the
    store stays unreachable across retries."""
    clock = clock or Clock()
    if refresh_seconds is None:
        refresh_seconds = int(os.environ.get("OBSERVER_REFRESH_SECONDS",
                                             DEFAULT_REFRESH_SECONDS))
    if tick_seconds is None:
        tick_seconds = int(os.environ.get("OBSERVER_TICK_SECONDS",
                                          DEFAULT_TICK_SECONDS))

    failures = 0
    now = clock.now()
    targets = load_observation_targets(store, now)
    last_refresh = now
    all_invocations: list[Invocation] = []
    ticks = 0
    while True:
        now = clock.now()
        if now - last_refresh >= refresh_seconds:
            try:
                targets = refresh_targets(store, now, targets)
                last_refresh = now
                failures = 0
            except StoreError as exc:
                failures += 1
                log.error("target refresh failed (%s/3): %s", failures, exc)
                if failures >= 3:
                    raise
        all_invocations.extend(observer_tick(now, targets, store, runner))
        ticks += 1
        if max_ticks is not None and ticks >= max_ticks:
            return all_invocations
        clock.sleep(tick_seconds)
