"""Hyperperiod construction and multi-DAG periodic scheduling."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

from .heft import (
    CycleWindow,
    PartialSchedule,
    PlacementFailure,
    ScheduleEntry,
    enhance_quality,
    instance_entries,
    schedule_base,
)
from .platform import Platform
from .workload import DagSpec, instantiate_cycle

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Failure:
    dag_id: str
    cycle_index: int
    reason: str


@dataclass(frozen=True)
class HyperSchedule:
    """Result of periodic scheduling.

    ``horizon`` is ``repetition_factor * hyperperiod``; the entry set repeats
    with that shift. ``base_entries`` keeps every successful instance's
    level-1 placement as it was before quality enhancement.
    """

    hyperperiod: int
    horizon: int
    entries: tuple[ScheduleEntry, ...] = ()
    windows: dict[tuple[str, int], CycleWindow] = field(default_factory=dict)
    per_dag_last_end: dict[str, int] = field(default_factory=dict)
    failures: tuple[Failure, ...] = ()
    base_entries: tuple[ScheduleEntry, ...] = ()
    repetition_factor: int = 1

    def instances(self) -> list[tuple[str, int]]:
        """Every (dag_id, cycle) attempted, successful or not."""
        return sorted(self.windows)

    def entries_by_instance(self) -> dict[tuple[str, int], list[ScheduleEntry]]:
        out: dict[tuple[str, int], list[ScheduleEntry]] = {}
        for e in self.entries:
            out.setdefault((e.instance.dag_id, e.instance.cycle_index), []).append(e)
        return out


def hyperperiod(periods: Sequence[int]) -> int:
    if not periods:
        raise ValueError("need at least one period")
    for p in periods:
        if p <= 0:
            raise ValueError(f"periods must be positive, got {p}")
    return math.lcm(*periods)


def cycle_windows(dag: DagSpec, hyper: int, repetition_factor: int = 1) -> list[CycleWindow]:
    """Nominal windows ``[release + k*period, release + (k+1)*period)``."""
    if hyper % dag.period:
        raise ValueError(f"hyperperiod {hyper} is not a multiple of period {dag.period}")
    if repetition_factor < 1:
        raise ValueError("repetition_factor must be >= 1")
    n = repetition_factor * hyper // dag.period
    base = dag.release
    return [CycleWindow(base + k * dag.period, base + (k + 1) * dag.period) for k in range(n)]


def schedule_periodic(
    dags: Sequence[DagSpec],
    platform: Platform,
    repetition_factor: int = 1,
    enhance: bool = True,
) -> HyperSchedule:
    """Schedule every cycle instance of every DAG, in input order.

    Failed instances are recorded and leave no allocation behind.
    """
    ids = [d.dag_id for d in dags]
    if len(set(ids)) != len(ids):
        raise ValueError(f"DAG ids must be unique, got {ids}")
    hyper = hyperperiod([d.period for d in dags] + [platform.background_period])
    horizon = repetition_factor * hyper
    reach = horizon + max((d.release for d in dags), default=0)
    sched = PartialSchedule.empty(platform, reach)

    windows: dict[tuple[str, int], CycleWindow] = {}
    last_end: dict[str, int] = {}
    failures: list[Failure] = []
    base: list[ScheduleEntry] = []

    for dag in dags:
        last = last_end.get(dag.dag_id, 0)
        for k, nominal in enumerate(cycle_windows(dag, hyper, repetition_factor)):
            start = max(nominal.start, last)
            window = CycleWindow(start, start + dag.period)
            windows[(dag.dag_id, k)] = window
            copy, mapping = instantiate_cycle(dag, k)
            try:
                placed = schedule_base(copy, sched, window, platform, mapping)
            except PlacementFailure as exc:
                log.debug("instance %s#%d failed: %s", dag.dag_id, k, exc)
                failures.append(Failure(dag.dag_id, k, str(exc)))
                continue
            base.extend(instance_entries(placed, copy))
            if enhance:
                placed = enhance_quality(copy, placed, window, platform)
            sched = placed
            last = max((e.finish for e in instance_entries(sched, copy)), default=last)
            last_end[dag.dag_id] = last

    return HyperSchedule(
        hyperperiod=hyper,
        horizon=horizon,
        entries=tuple(sorted(sched.entries.values(), key=_entry_key)),
        windows=windows,
        per_dag_last_end=last_end,
        failures=tuple(failures),
        base_entries=tuple(sorted(base, key=_entry_key)),
        repetition_factor=repetition_factor,
    )


def _entry_key(e: ScheduleEntry):
    return (e.instance.dag_id, e.instance.cycle_index, e.start, e.vm, e.instance_id)
