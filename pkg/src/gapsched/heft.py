"""Gap-aware modified HEFT for one DAG instance inside one cycle window.

Two phases: every task is first placed at its base quality level on the VM
giving the earliest finish; then each task, in rank order, is pushed up one
level at a time on its own VM while the surrounding gaps and its
neighbours' timing still allow it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .platform import EventQueue, Platform, allocate_interval, find_feasible_gap, release_interval
from .ranking import priority_order, upward_ranks
from .workload import DagSpec, TaskInstance, comm_delay


class PrecedenceError(RuntimeError):
    """A task was placed before one of its predecessors."""


class PlacementFailure(Exception):
    """No VM can host a task of the instance inside its window."""

    def __init__(self, task_id: str, window: "CycleWindow"):
        self.task_id = task_id
        self.window = window
        super().__init__(f"task {task_id} does not fit in window [{window.start}, {window.end})")


@dataclass(frozen=True)
class CycleWindow:
    start: int
    end: int

    def __post_init__(self):
        if self.end < self.start:
            raise ValueError(f"window end {self.end} precedes start {self.start}")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class ScheduleEntry:
    instance: TaskInstance
    vm: str
    level: int
    start: int
    finish: int

    @property
    def instance_id(self) -> str:
        return self.instance.instance_id

    @property
    def duration(self) -> int:
        return self.finish - self.start


@dataclass
class PartialSchedule:
    """Entries placed so far plus the idle time left on every VM."""

    entries: dict[str, ScheduleEntry] = field(default_factory=dict)
    queues: dict[str, EventQueue] = field(default_factory=dict)

    @classmethod
    def empty(cls, platform: Platform, horizon: int) -> "PartialSchedule":
        return cls({}, platform.tiled_queues(horizon))

    def copy(self) -> "PartialSchedule":
        return PartialSchedule(dict(self.entries), dict(self.queues))

    def _take(self, entry: ScheduleEntry) -> None:
        self.queues[entry.vm] = allocate_interval(self.queues[entry.vm], entry.start, entry.duration)
        self.entries[entry.instance_id] = entry

    def _give_back(self, entry: ScheduleEntry) -> None:
        self.queues[entry.vm] = release_interval(self.queues[entry.vm], entry.start, entry.duration)
        del self.entries[entry.instance_id]


def _instances_for(dag: DagSpec, instances: Optional[Mapping[str, TaskInstance]]) -> dict[str, TaskInstance]:
    if instances is None:
        return {t.task_id: TaskInstance(t.task_id, t.task_id, dag.dag_id, 0) for t in dag.tasks}
    # keyed by either the copy's task ids or the source ids
    by_iid = {inst.instance_id: inst for inst in instances.values()}
    return {t.task_id: by_iid[t.task_id] for t in dag.tasks}


def earliest_start_time(
    task_id: str,
    vm: str,
    sched: PartialSchedule,
    window: CycleWindow,
    dag: DagSpec,
    platform: Platform,
) -> int:
    est = window.start
    for e in dag.in_edges[task_id]:
        pred = sched.entries.get(e.src)
        if pred is None:
            raise PrecedenceError(f"{task_id}: predecessor {e.src} is not scheduled yet")
        est = max(est, pred.finish + comm_delay(e, pred.vm, vm, platform))
    return est


def place_task(
    task_id: str,
    sched: PartialSchedule,
    window: CycleWindow,
    dag: DagSpec,
    platform: Platform,
    level: int = 1,
) -> Optional[tuple[str, int]]:
    """VM and start giving the earliest finish, or ``None`` if nothing fits.

    Ties on finish time go to the VM listed first in the platform.
    """
    task = dag.task_map[task_id]
    best = None
    for vm in platform.vm_ids:
        est = earliest_start_time(task_id, vm, sched, window, dag, platform)
        dur = task.time(vm, level)
        hit = find_feasible_gap(sched.queues[vm], est, dur, window.end)
        if hit is None:
            continue
        start = hit[1]
        if best is None or start + dur < best[0]:
            best = (start + dur, vm, start)
    if best is None:
        return None
    return best[1], best[2]


def schedule_base(
    dag: DagSpec,
    sched: PartialSchedule,
    window: CycleWindow,
    platform: Platform,
    instances: Optional[Mapping[str, TaskInstance]] = None,
) -> PartialSchedule:
    """Place every task at level 1 in priority order.

    Works on a copy: on ``PlacementFailure`` the caller's ``sched`` is
    untouched, so a failed instance leaves nothing behind.
    """
    insts = _instances_for(dag, instances)
    out = sched.copy()
    for tid in priority_order(upward_ranks(dag, platform)):
        spot = place_task(tid, out, window, dag, platform, level=1)
        if spot is None:
            raise PlacementFailure(tid, window)
        vm, start = spot
        out._take(ScheduleEntry(insts[tid], vm, 1, start, start + dag.task_map[tid].time(vm, 1)))
    return out


def _upgrade_bounds(
    entry: ScheduleEntry, sched: PartialSchedule, window: CycleWindow, dag: DagSpec, platform: Platform
) -> tuple[int, int]:
    tid = entry.instance_id
    earliest = entry.start
    for e in dag.in_edges[tid]:
        pred = sched.entries[e.src]
        earliest = max(earliest, pred.finish + comm_delay(e, pred.vm, entry.vm, platform))
    latest = window.end
    for e in dag.out_edges[tid]:
        succ = sched.entries.get(e.dst)
        if succ is not None:
            latest = min(latest, succ.start - comm_delay(e, entry.vm, succ.vm, platform))
    return earliest, latest


def enhance_quality(
    dag: DagSpec,
    sched: PartialSchedule,
    window: CycleWindow,
    platform: Platform,
) -> PartialSchedule:
    """Raise quality levels step by step without moving tasks across VMs.

    A task is lifted out of its slot and re-placed one level higher, no
    earlier than its current start, after every predecessor's data has
    arrived and early enough for every successor's data to arrive on time.
    When the next level does not fit, the original entry is restored
    exactly and the task keeps its current level.
    """
    out = sched.copy()
    for tid in priority_order(upward_ranks(dag, platform)):
        task = dag.task_map[tid]
        while True:
            cur = out.entries[tid]
            if cur.level >= task.max_level:
                break
            earliest, latest = _upgrade_bounds(cur, out, window, dag, platform)
            out._give_back(cur)
            dur = task.time(cur.vm, cur.level + 1)
            hit = find_feasible_gap(out.queues[cur.vm], earliest, dur, latest)
            if hit is None:
                out._take(cur)
                break
            start = hit[1]
            out._take(replace(cur, level=cur.level + 1, start=start, finish=start + dur))
    return out


def instance_entries(sched: PartialSchedule, dag: DagSpec) -> list[ScheduleEntry]:
    return [sched.entries[t.task_id] for t in dag.tasks]
