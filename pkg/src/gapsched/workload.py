"""Periodic DAG applications with quality-versioned tasks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Optional, Sequence

from .platform import Platform


@dataclass(frozen=True)
class QualityVersion:
    level: int
    reward: Fraction


@dataclass(frozen=True)
class TaskSpec:
    """One DAG node.

    ``exec_time[vm_id]`` lists the execution time of every quality level on
    that VM, index 0 being level 1.
    """

    task_id: str
    exec_time: Mapping[str, tuple[int, ...]]
    versions: tuple[QualityVersion, ...]

    @property
    def max_level(self) -> int:
        return len(self.versions)

    def time(self, vm_id: str, level: int) -> int:
        if not 1 <= level <= len(self.versions):
            raise KeyError(f"{self.task_id}: no quality level {level}")
        return self.exec_time[vm_id][level - 1]

    def reward(self, level: int) -> Fraction:
        return self.versions[level - 1].reward

    @property
    def max_reward(self) -> Fraction:
        return max(v.reward for v in self.versions)


@dataclass(frozen=True)
class EdgeSpec:
    src: str
    dst: str
    data_volume: Fraction = Fraction(0)


@dataclass(frozen=True)
class TaskInstance:
    instance_id: str
    source_task: str
    dag_id: str
    cycle_index: int


@dataclass(frozen=True)
class DagSpec:
    dag_id: str
    tasks: tuple[TaskSpec, ...]
    edges: tuple[EdgeSpec, ...]
    period: int
    release: int = 0

    @cached_property
    def task_map(self) -> dict[str, TaskSpec]:
        return {t.task_id: t for t in self.tasks}

    @cached_property
    def in_edges(self) -> dict[str, list[EdgeSpec]]:
        out: dict[str, list[EdgeSpec]] = {t.task_id: [] for t in self.tasks}
        for e in self.edges:
            out.setdefault(e.dst, []).append(e)
        return out

    @cached_property
    def out_edges(self) -> dict[str, list[EdgeSpec]]:
        out: dict[str, list[EdgeSpec]] = {t.task_id: [] for t in self.tasks}
        for e in self.edges:
            out.setdefault(e.src, []).append(e)
        return out

    def entry_tasks(self) -> list[str]:
        return [t.task_id for t in self.tasks if not self.in_edges[t.task_id]]

    def exit_tasks(self) -> list[str]:
        return [t.task_id for t in self.tasks if not self.out_edges[t.task_id]]

    def topological_order(self) -> list[str]:
        """Kahn's algorithm; raises ``ValueError`` on a cycle."""
        indeg = {t.task_id: len(self.in_edges[t.task_id]) for t in self.tasks}
        ready = [tid for tid, d in indeg.items() if d == 0]
        order = []
        while ready:
            tid = ready.pop()
            order.append(tid)
            for e in self.out_edges[tid]:
                indeg[e.dst] -= 1
                if indeg[e.dst] == 0:
                    ready.append(e.dst)
        if len(order) != len(self.tasks):
            raise ValueError(f"{self.dag_id}: cycle detected")
        return order

    def restrict_vms(self, vm_ids: Sequence[str]) -> "DagSpec":
        """Drop execution-time columns for VMs outside ``vm_ids``."""
        tasks = tuple(
            replace(t, exec_time={v: t.exec_time[v] for v in vm_ids}) for t in self.tasks
        )
        return replace(self, tasks=tasks)


@dataclass(frozen=True)
class Issue:
    kind: str
    location: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.location}: {self.detail}"


def validate_dag(dag: DagSpec, platform: Optional[Platform] = None) -> list[Issue]:
    """Structural check. An empty list means the DAG is well formed."""
    issues: list[Issue] = []
    where = dag.dag_id
    if dag.period <= 0:
        issues.append(Issue("period", where, f"period must be positive, got {dag.period}"))
    if dag.release < 0:
        issues.append(Issue("release", where, f"release must be >= 0, got {dag.release}"))
    if not dag.tasks:
        issues.append(Issue("empty", where, "DAG has no tasks"))

    ids = [t.task_id for t in dag.tasks]
    seen = set()
    for tid in ids:
        if tid in seen:
            issues.append(Issue("duplicate task", f"{where}/{tid}", "task id used twice"))
        seen.add(tid)

    vm_ids = platform.vm_ids if platform is not None else None
    for t in dag.tasks:
        loc = f"{where}/{t.task_id}"
        levels = [v.level for v in t.versions]
        if levels != list(range(1, len(levels) + 1)):
            issues.append(Issue("version levels", loc, f"levels {levels} are not 1..n"))
        rewards = [v.reward for v in t.versions]
        if any(r < 0 for r in rewards):
            issues.append(Issue("negative reward", loc, f"rewards {rewards}"))
        if any(b <= a for a, b in zip(rewards, rewards[1:])):
            issues.append(Issue("non-monotone rewards", loc, f"rewards {rewards}"))
        for vm in vm_ids if vm_ids is not None else sorted(t.exec_time):
            times = t.exec_time.get(vm)
            if times is None:
                issues.append(Issue("missing exec time", loc, f"no execution times for VM {vm}"))
                continue
            if len(times) != len(t.versions):
                issues.append(
                    Issue("missing exec time", loc, f"VM {vm}: {len(times)} times for {len(t.versions)} levels")
                )
            if any(x <= 0 for x in times):
                issues.append(Issue("non-positive exec time", loc, f"VM {vm}: {list(times)}"))
            if any(b <= a for a, b in zip(times, times[1:])):
                issues.append(Issue("non-monotone version times", loc, f"VM {vm}: {list(times)}"))

    for e in dag.edges:
        loc = f"{where}/{e.src}->{e.dst}"
        if e.src == e.dst:
            issues.append(Issue("self loop", loc, "edge from a task to itself"))
        for end in (e.src, e.dst):
            if end not in seen:
                issues.append(Issue("unknown task", loc, f"edge endpoint {end!r} does not exist"))
        if e.data_volume < 0:
            issues.append(Issue("negative volume", loc, f"data volume {e.data_volume}"))

    if not any(i.kind in ("unknown task", "duplicate task") for i in issues) and dag.tasks:
        try:
            dag.topological_order()
        except ValueError:
            issues.append(Issue("cycle detected", where, "precedence graph is not acyclic"))
        else:
            if not dag.entry_tasks() or not dag.exit_tasks():
                issues.append(Issue("no entry/exit", where, "need at least one entry and one exit task"))
    return issues


def instance_id(namespace: str, task_id: str, cycle_index: int) -> str:
    return f"{namespace}/{task_id}.{cycle_index}"


def instantiate_cycle(
    dag: DagSpec, cycle_index: int, id_namespace: Optional[str] = None
) -> tuple[DagSpec, dict[str, TaskInstance]]:
    """Copy ``dag`` with fresh task ids for one cycle.

    Ids have the form ``<namespace>/<task>.<cycle>``; the namespace defaults
    to the DAG id, which makes them unique across a hyper-schedule.
    """
    ns = dag.dag_id if id_namespace is None else id_namespace
    mapping = {
        t.task_id: TaskInstance(instance_id(ns, t.task_id, cycle_index), t.task_id, dag.dag_id, cycle_index)
        for t in dag.tasks
    }
    tasks = tuple(replace(t, task_id=mapping[t.task_id].instance_id) for t in dag.tasks)
    edges = tuple(
        EdgeSpec(mapping[e.src].instance_id, mapping[e.dst].instance_id, e.data_volume) for e in dag.edges
    )
    return replace(dag, tasks=tasks, edges=edges), mapping


def comm_delay(edge: EdgeSpec, src_vm: str, dst_vm: str, platform: Platform) -> int:
    """Transfer time in whole ticks; zero when both ends share a VM."""
    if src_vm == dst_vm:
        platform.vm_index(src_vm)
        return 0
    bw = platform.link_bandwidth(src_vm, dst_vm)
    return math.ceil(Fraction(edge.data_volume) / bw)


def mean_comm_cost(edge: EdgeSpec, platform: Platform) -> Fraction:
    """Average transfer cost used for ranking: volume over mean link bandwidth."""
    bw = platform.mean_bandwidth()
    if bw is None:
        return Fraction(0)
    return Fraction(edge.data_volume) / bw


def make_task(
    task_id: str,
    times: Mapping[str, Sequence[int]],
    rewards: Optional[Sequence[object]] = None,
) -> TaskSpec:
    """Build a task; rewards default to the level index (1, 2, ...)."""
    n = len(next(iter(times.values())))
    rewards = rewards if rewards is not None else range(1, n + 1)
    return TaskSpec(
        task_id,
        {vm: tuple(int(x) for x in ts) for vm, ts in times.items()},
        tuple(QualityVersion(i + 1, Fraction(r)) for i, r in enumerate(rewards)),
    )
