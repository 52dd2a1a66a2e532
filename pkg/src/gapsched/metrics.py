"""Normalized reward and tick accounting for a hyper-schedule."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .heft import ScheduleEntry
from .periodic import HyperSchedule
from .platform import Platform
from .workload import DagSpec


class IntegrityError(ValueError):
    """A schedule entry does not match any known DAG task."""


@dataclass(frozen=True)
class RewardReport:
    r_act: Fraction
    r_max: Fraction
    nr_percent: Fraction
    per_dag: dict[str, tuple[Fraction, Fraction]] = field(default_factory=dict)
    nullified_instances: int = 0

    def summary(self) -> str:
        return (
            f"NR = {float(self.nr_percent):.2f}% "
            f"(reward {float(self.r_act):.2f} of {float(self.r_max):.2f}, "
            f"{self.nullified_instances} nullified instance(s))"
        )


def _percent(act: Fraction, top: Fraction) -> Fraction:
    return act * 100 / top if top else Fraction(0)


def normalized_reward(
    hs: HyperSchedule, dags: Sequence[DagSpec], entries: Optional[Iterable[ScheduleEntry]] = None
) -> RewardReport:
    """Achieved reward as a percentage of running every instance at its top level.

    Failed instances earn nothing but still count toward the maximum.
    ``entries`` overrides ``hs.entries``, e.g. to score ``hs.base_entries``.
    """
    by_id = {d.dag_id: d for d in dags}
    failed = {(f.dag_id, f.cycle_index) for f in hs.failures}
    instances = set(hs.windows) | failed
    for e in hs.entries:
        instances.add((e.instance.dag_id, e.instance.cycle_index))

    per_max: dict[str, Fraction] = {d: Fraction(0) for d in by_id}
    for dag_id, _ in instances:
        if dag_id not in by_id:
            raise IntegrityError(f"schedule mentions unknown DAG {dag_id!r}")
        per_max[dag_id] += sum((t.max_reward for t in by_id[dag_id].tasks), Fraction(0))

    per_act: dict[str, Fraction] = {d: Fraction(0) for d in by_id}
    for e in hs.entries if entries is None else entries:
        inst = e.instance
        dag = by_id.get(inst.dag_id)
        if dag is None or inst.source_task not in dag.task_map:
            raise IntegrityError(f"entry {inst.instance_id} references an unknown task")
        if (inst.dag_id, inst.cycle_index) in failed:
            continue
        task = dag.task_map[inst.source_task]
        if not 1 <= e.level <= task.max_level:
            raise IntegrityError(f"entry {inst.instance_id} has unknown level {e.level}")
        per_act[inst.dag_id] += task.reward(e.level)

    r_act = sum(per_act.values(), Fraction(0))
    r_max = sum(per_max.values(), Fraction(0))
    return RewardReport(
        r_act=r_act,
        r_max=r_max,
        nr_percent=_percent(r_act, r_max),
        per_dag={d: (per_act[d], per_max[d]) for d in by_id},
        nullified_instances=len(failed),
    )


@dataclass(frozen=True)
class ScheduleStats:
    horizon: int
    busy: dict[str, int]
    idle: dict[str, int]
    preoccupied: dict[str, int]
    makespan: dict[tuple[str, int], int]


def schedule_stats(hs: HyperSchedule, platform: Platform) -> ScheduleStats:
    """Per-VM busy/idle/pre-occupied ticks over ``[0, horizon)``."""
    horizon = hs.horizon
    free = {vm: q.idle_time for vm, q in platform.tiled_queues(horizon).items()}
    busy = {vm: 0 for vm in platform.vm_ids}
    for e in hs.entries:
        # clip to the horizon; entries past it belong to the next repetition
        lo, hi = max(e.start, 0), min(e.finish, horizon)
        if hi > lo:
            busy[e.vm] += hi - lo
        wrapped_lo, wrapped_hi = max(e.start - horizon, 0), e.finish - horizon
        if wrapped_hi > wrapped_lo:
            busy[e.vm] += wrapped_hi - wrapped_lo
    makespan = {}
    for key, es in hs.entries_by_instance().items():
        makespan[key] = max(e.finish for e in es) - hs.windows[key].start
    return ScheduleStats(
        horizon=horizon,
        busy=busy,
        idle={vm: free[vm] - busy[vm] for vm in platform.vm_ids},
        preoccupied={vm: horizon - free[vm] for vm in platform.vm_ids},
        makespan=makespan,
    )
