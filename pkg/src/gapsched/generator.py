"""Seeded random corpus: layered DAGs, CCR scaling, pre-occupied platforms.

Every random draw comes from its own ``numpy.random.SeedSequence`` keyed
by ``(seed, purpose, index...)``. VM ``k`` therefore gets the same
execution times, idle pattern and links whether the platform has 4 VMs
or 10, and changing one knob never reshuffles unrelated draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .platform import EventQueue, IdleSlot, Platform, VmDescriptor, normalize_event_queue
from .workload import DagSpec, EdgeSpec, QualityVersion, TaskSpec

# sub-stream tags
_STRUCTURE, _EXEC, _VOLUME, _IDLE, _LINK = 1, 2, 3, 4, 5


class GenerationError(ValueError):
    """Parameters cannot be satisfied."""


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, *key]))


def vm_names(n: int) -> list[str]:
    return [f"V{i + 1}" for i in range(n)]


@dataclass(frozen=True)
class GenParams:
    n_tasks: int
    edge_density: float = 0.3
    n_levels: int = 2
    period_slack: Fraction = Fraction(3, 2)
    exec_time_range: tuple[int, int] = (1, 10)
    seed: int = 0
    n_vms: int = 4
    period_quantum: int = 20
    volume_range: tuple[int, int] = (1, 10)
    dag_id: str = "dag"

    def __post_init__(self):
        if self.n_tasks < 1:
            raise GenerationError("n_tasks must be >= 1")
        if not 0 <= self.edge_density <= 1:
            raise GenerationError("edge_density must lie in [0, 1]")
        if self.n_levels < 1 or self.n_vms < 1 or self.period_quantum < 1:
            raise GenerationError("n_levels, n_vms and period_quantum must be >= 1")
        if Fraction(self.period_slack) < 1:
            raise GenerationError("period_slack must be >= 1")
        lo, hi = self.exec_time_range
        if not 1 <= lo <= hi:
            raise GenerationError(f"bad exec_time_range {self.exec_time_range}")


@dataclass(frozen=True)
class OccupancyParams:
    n_vms: int = 4
    occupancy_fraction: Fraction = Fraction(0)
    background_period: int = 20
    min_slot: int = 2
    seed: int = 0
    bandwidth_range: tuple[int, int] = (1, 5)

    def __post_init__(self):
        occ = Fraction(self.occupancy_fraction)
        if not 0 <= occ < 1:
            raise GenerationError("occupancy_fraction must lie in [0, 1)")
        if self.n_vms < 1 or self.background_period < 1 or self.min_slot < 1:
            raise GenerationError("n_vms, background_period and min_slot must be >= 1")
        lo, hi = self.bandwidth_range
        if not 1 <= lo <= hi:
            raise GenerationError(f"bad bandwidth_range {self.bandwidth_range}")


def _layers(n: int, rng: np.random.Generator) -> list[list[int]]:
    depth = max(1, round(math.sqrt(n)))
    which = list(range(depth)) + [int(x) for x in rng.integers(0, depth, size=n - depth)]
    layers: list[list[int]] = [[] for _ in range(depth)]
    for task, layer in enumerate(sorted(which)):
        layers[layer].append(task)
    return layers


def _level_times(rng: np.random.Generator, n_levels: int, lo: int, hi: int) -> tuple[int, ...]:
    draws = sorted(int(x) for x in rng.integers(lo, hi + 1, size=n_levels))
    for i in range(1, n_levels):
        draws[i] = max(draws[i], draws[i - 1] + 1)
    return tuple(draws)


def critical_path_base(dag: DagSpec) -> Fraction:
    """Longest path of mean level-1 execution times, ignoring communication."""
    finish: dict[str, Fraction] = {}
    for tid in dag.topological_order():
        t = dag.task_map[tid]
        w = Fraction(sum(ts[0] for ts in t.exec_time.values()), len(t.exec_time))
        finish[tid] = w + max((finish[e.src] for e in dag.in_edges[tid]), default=Fraction(0))
    return max(finish.values(), default=Fraction(0))


def generate_dag(params: GenParams) -> DagSpec:
    """Layered random DAG; edges only run from one layer to the next."""
    n = params.n_tasks
    width = len(str(n))
    names = [f"t{i + 1:0{width}d}" for i in range(n)]

    srng = _rng(params.seed, _STRUCTURE)
    layers = _layers(n, srng)
    pairs: list[tuple[int, int]] = []
    for upper, lower in zip(layers, layers[1:]):
        for child in lower:
            parents = [p for p in upper if srng.random() < params.edge_density]
            if not parents:
                parents = [upper[int(srng.integers(0, len(upper)))]]
            pairs.extend((p, child) for p in parents)
    pairs.sort()

    vrng = _rng(params.seed, _VOLUME)
    vlo, vhi = params.volume_range
    edges = tuple(
        EdgeSpec(names[a], names[b], Fraction(int(vrng.integers(vlo, vhi + 1)))) for a, b in pairs
    )

    lo, hi = params.exec_time_range
    columns = {}
    for k, vm in enumerate(vm_names(params.n_vms)):
        erng = _rng(params.seed, _EXEC, k)
        columns[vm] = [_level_times(erng, params.n_levels, lo, hi) for _ in range(n)]
    versions = tuple(QualityVersion(lv, Fraction(lv)) for lv in range(1, params.n_levels + 1))
    tasks = tuple(
        TaskSpec(names[i], {vm: columns[vm][i] for vm in columns}, versions) for i in range(n)
    )

    draft = DagSpec(params.dag_id, tasks, edges, period=1)
    need = math.ceil(Fraction(params.period_slack) * critical_path_base(draft))
    q = params.period_quantum
    period = max(q, -(-need // q) * q)
    return replace(draft, period=period)


def apply_ccr(dag: DagSpec, ccr, platform: Platform) -> DagSpec:
    """Rescale edge volumes so mean transfer time at mean bandwidth equals
    ``ccr`` times the mean level-1 execution time over (task, VM) pairs."""
    ccr = Fraction(ccr)
    if ccr < 0:
        raise ValueError("ccr must be >= 0")
    if not dag.edges:
        return dag
    if ccr == 0:
        return replace(dag, edges=tuple(replace(e, data_volume=Fraction(0)) for e in dag.edges))
    vms = platform.vm_ids
    mean_exec = Fraction(sum(t.time(vm, 1) for t in dag.tasks for vm in vms), len(dag.tasks) * len(vms))
    mean_bw = platform.mean_bandwidth() or Fraction(1)
    mean_vol = sum((Fraction(e.data_volume) for e in dag.edges), Fraction(0)) / len(dag.edges)
    if mean_vol == 0:
        raise ValueError("cannot rescale all-zero data volumes")
    scale = ccr * mean_exec * mean_bw / mean_vol
    return replace(dag, edges=tuple(replace(e, data_volume=Fraction(e.data_volume) * scale) for e in dag.edges))


def _composition(rng: np.random.Generator, total: int, parts: int) -> list[int]:
    """``parts`` non-negative integers summing to ``total``."""
    cuts = sorted(int(x) for x in rng.integers(0, total + 1, size=parts - 1))
    bounds = [0, *cuts, total]
    return [b - a for a, b in zip(bounds, bounds[1:])]


def idle_pattern(rng: np.random.Generator, period: int, busy: int, min_slot: int) -> list[IdleSlot]:
    """Free slots in ``[0, period)`` around ``busy`` randomly placed occupied ticks.

    Around the period boundary, free slots are at least ``min_slot`` long
    (a slot cut by the boundary joins its other half when tiled).
    """
    free = period - busy
    if busy == 0:
        return [IdleSlot(0, period)]
    if free < min_slot:
        raise GenerationError(
            f"{busy} occupied ticks of {period} leave {free} free, less than min_slot {min_slot}"
        )
    k = int(rng.integers(1, min(busy, free // min_slot) + 1))
    busy_parts = [1 + x for x in _composition(rng, busy - k, k)]
    free_parts = [min_slot + x for x in _composition(rng, free - k * min_slot, k)]
    offset = int(rng.integers(0, period))
    slots = []
    cursor = offset
    for f, b in zip(free_parts, busy_parts):
        s = cursor % period
        if s + f <= period:
            slots.append(IdleSlot(s, f))
        else:
            slots.append(IdleSlot(s, period - s))
            slots.append(IdleSlot(0, s + f - period))
        cursor += f + b
    return list(normalize_event_queue(EventQueue("", tuple(slots))).slots)


def occupied_ticks(params: OccupancyParams) -> int:
    exact = Fraction(params.occupancy_fraction) * params.background_period
    return math.floor(exact + Fraction(1, 2))


def generate_preoccupation(params: OccupancyParams) -> Platform:
    """Platform whose VMs are each busy for ``occupancy_fraction`` of every
    background period (rounded to whole ticks)."""
    names = vm_names(params.n_vms)
    busy = occupied_ticks(params)
    queues = {}
    for k, vm in enumerate(names):
        slots = idle_pattern(_rng(params.seed, _IDLE, k), params.background_period, busy, params.min_slot)
        queues[vm] = EventQueue(vm, tuple(slots))
    lo, hi = params.bandwidth_range
    links = {}
    for i, a in enumerate(names):
        for j in range(i + 1, len(names)):
            links[(a, names[j])] = Fraction(int(_rng(params.seed, _LINK, i, j).integers(lo, hi + 1)))
    return Platform(
        vms=tuple(VmDescriptor(vm, f"H{k + 1}") for k, vm in enumerate(names)),
        bandwidth=links,
        queues=queues,
        background_period=params.background_period,
    )


def restrict(dag: DagSpec, platform: Platform, vm_ids: Sequence[str]) -> tuple[DagSpec, Platform]:
    return dag.restrict_vms(vm_ids), platform.restrict(vm_ids)
