"""Independent schedule checker and exhaustive optimum for tiny instances.

Nothing here touches the event-queue code: occupied time is rebuilt from
the raw idle pattern with plain interval arithmetic, and the exhaustive
search works on per-tick bitmasks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .heft import CycleWindow, ScheduleEntry
from .periodic import HyperSchedule
from .platform import Platform
from .workload import DagSpec

MAX_TASKS = 6
MAX_VMS = 3
MAX_WINDOW = 32

KINDS = ("overlap", "precedence", "window", "preoccupation", "version", "periodicity", "integrity")


class SearchSpaceError(ValueError):
    """Instance too large for exhaustive search."""


@dataclass(frozen=True)
class Violation:
    kind: str
    location: str
    detail: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.location}: {self.detail}"


def busy_pattern(platform: Platform, vm: str) -> list[tuple[int, int]]:
    """Occupied ``[a, b)`` intervals within one background period."""
    period = platform.background_period
    out, cursor = [], 0
    for start, dur in sorted(platform.queues[vm].pairs()):
        if start > cursor:
            out.append((cursor, start))
        cursor = max(cursor, start + dur)
    if cursor < period:
        out.append((cursor, period))
    return out


def _hits_busy(start: int, finish: int, busy: list[tuple[int, int]], period: int) -> Optional[tuple[int, int]]:
    for m in range(start // period, (finish - 1) // period + 1):
        base = m * period
        for a, b in busy:
            if max(start, a + base) < min(finish, b + base):
                return a + base, b + base
    return None


def _delay(volume: Fraction, src_vm: str, dst_vm: str, platform: Platform) -> int:
    if src_vm == dst_vm:
        return 0
    key = (src_vm, dst_vm) if src_vm <= dst_vm else (dst_vm, src_vm)
    return math.ceil(Fraction(volume) / platform.bandwidth[key])


def _overlaps(entries: Sequence[ScheduleEntry]) -> list[tuple[ScheduleEntry, ScheduleEntry]]:
    per_vm: dict[str, list[ScheduleEntry]] = {}
    for e in entries:
        per_vm.setdefault(e.vm, []).append(e)
    clashes = []
    for es in per_vm.values():
        es = sorted(es, key=lambda e: (e.start, e.finish))
        reach = None
        for e in es:
            if reach is not None and e.start < reach.finish:
                clashes.append((reach, e))
            if reach is None or e.finish > reach.finish:
                reach = e
    return clashes


def verify_schedule(hs: HyperSchedule, dags: Sequence[DagSpec], platform: Platform) -> list[Violation]:
    """Every constraint the schedule must satisfy; empty means feasible."""
    out: list[Violation] = []
    by_id = {d.dag_id: d for d in dags}
    vms = set(platform.vm_ids)
    period = platform.background_period
    busy = {vm: busy_pattern(platform, vm) for vm in vms}

    good: list[ScheduleEntry] = []
    placed: dict[tuple[str, int], dict[str, ScheduleEntry]] = {}
    for e in hs.entries:
        inst = e.instance
        loc = inst.instance_id
        dag = by_id.get(inst.dag_id)
        if dag is None or inst.source_task not in dag.task_map:
            out.append(Violation("integrity", loc, "entry references an unknown DAG task"))
            continue
        if e.vm not in vms:
            out.append(Violation("integrity", loc, f"unknown VM {e.vm!r}"))
            continue
        key = (inst.dag_id, inst.cycle_index)
        slot = placed.setdefault(key, {})
        if inst.source_task in slot:
            out.append(Violation("integrity", loc, "task scheduled twice in one instance"))
            continue
        slot[inst.source_task] = e
        good.append(e)

        task = dag.task_map[inst.source_task]
        if not 1 <= e.level <= task.max_level:
            out.append(Violation("version", loc, f"level {e.level} does not exist"))
        elif e.finish - e.start != task.exec_time[e.vm][e.level - 1]:
            out.append(
                Violation(
                    "version", loc,
                    f"runs {e.finish - e.start} ticks but level {e.level} on {e.vm} needs "
                    f"{task.exec_time[e.vm][e.level - 1]}",
                )
            )
        if e.start < 0 or e.finish <= e.start:
            out.append(Violation("window", loc, f"degenerate interval [{e.start}, {e.finish})"))
            continue
        window = hs.windows.get(key)
        if window is None:
            out.append(Violation("integrity", loc, "no cycle window recorded for this instance"))
        elif e.start < window.start or e.finish > window.end:
            out.append(
                Violation("window", loc, f"[{e.start}, {e.finish}) leaves window [{window.start}, {window.end})")
            )
        hit = _hits_busy(e.start, e.finish, busy[e.vm], period)
        if hit is not None:
            out.append(Violation("preoccupation", loc, f"[{e.start}, {e.finish}) meets occupied {hit} on {e.vm}"))

    for a, b in _overlaps(good):
        out.append(
            Violation("overlap", a.vm, f"{a.instance_id} [{a.start}, {a.finish}) and {b.instance_id} [{b.start}, {b.finish})")
        )

    failed = {(f.dag_id, f.cycle_index) for f in hs.failures}
    for key, tasks in sorted(placed.items()):
        dag = by_id[key[0]]
        where = f"{key[0]}#{key[1]}"
        if key in failed:
            out.append(Violation("integrity", where, "instance listed as failed but has entries"))
        missing = set(dag.task_map) - set(tasks)
        if missing:
            out.append(Violation("integrity", where, f"instance incomplete, missing {sorted(missing)}"))
        for edge in dag.edges:
            src, dst = tasks.get(edge.src), tasks.get(edge.dst)
            if src is None or dst is None:
                continue
            need = src.finish + _delay(edge.data_volume, src.vm, dst.vm, platform)
            if dst.start < need:
                out.append(
                    Violation("precedence", where, f"{edge.dst} starts {dst.start} before data from {edge.src} arrives at {need}")
                )

    if hs.horizon <= 0 or hs.horizon % period:
        out.append(Violation("periodicity", "schedule", f"horizon {hs.horizon} is not a multiple of background period {period}"))
    for dag in dags:
        if hs.horizon % dag.period:
            out.append(Violation("periodicity", dag.dag_id, f"period {dag.period} does not divide horizon {hs.horizon}"))
    shifted = [
        ScheduleEntry(e.instance, e.vm, e.level, e.start + hs.horizon, e.finish + hs.horizon) for e in good
    ]
    for a, b in _overlaps(good + shifted):
        if (a.start >= hs.horizon) != (b.start >= hs.horizon):
            out.append(
                Violation("periodicity", a.vm, f"{a.instance_id} and {b.instance_id} collide across the repetition boundary")
            )
    return out


@dataclass(frozen=True)
class OptimalResult:
    reward: Optional[Fraction]
    witness: Optional[dict[str, tuple[str, int, int]]]  # task -> (vm, level, start)

    @property
    def feasible(self) -> bool:
        return self.reward is not None


def _free_mask(platform: Platform, vm: str, window: CycleWindow) -> int:
    period = platform.background_period
    pattern = platform.queues[vm].pairs()
    mask = 0
    for t in range(window.length):
        phase = (window.start + t) % period
        if any(s <= phase < s + d for s, d in pattern):
            mask |= 1 << t
    return mask


def brute_force_optimal(dag: DagSpec, platform: Platform, window: CycleWindow) -> OptimalResult:
    """Maximum total reward over all feasible (VM, level, start) choices.

    Assignments of (VM, level) are tried in decreasing reward order; the
    first one admitting integer start times for every task is optimal.
    Start times are enumerated on the tick grid, which is exact because
    every duration and delay is a whole number of ticks.
    """
    vms = platform.vm_ids
    if len(dag.tasks) > MAX_TASKS or len(vms) > MAX_VMS or window.length > MAX_WINDOW:
        raise SearchSpaceError(
            f"exhaustive search limited to {MAX_TASKS} tasks, {MAX_VMS} VMs, "
            f"window {MAX_WINDOW}; got {len(dag.tasks)}, {len(vms)}, {window.length}"
        )
    if not dag.tasks:
        return OptimalResult(Fraction(0), {})

    order = dag.topological_order()
    tasks = [dag.task_map[t] for t in order]
    pos = {t: i for i, t in enumerate(order)}
    preds = [[(pos[e.src], e.data_volume) for e in dag.in_edges[t]] for t in order]
    free = {vm: _free_mask(platform, vm, window) for vm in vms}
    capacity = {vm: bin(m).count("1") for vm, m in free.items()}
    span = window.length

    choices = [[(vm, lv) for vm in vms for lv in range(1, t.max_level + 1)] for t in tasks]
    combos = []
    for combo in itertools.product(*choices):
        load = dict.fromkeys(vms, 0)
        for t, (vm, lv) in zip(tasks, combo):
            load[vm] += t.time(vm, lv)
        if any(load[vm] > capacity[vm] for vm in vms):
            continue
        reward = sum((t.reward(lv) for t, (_, lv) in zip(tasks, combo)), Fraction(0))
        combos.append((reward, combo))
    combos.sort(key=lambda rc: -rc[0])

    for reward, combo in combos:
        starts = _place_all(tasks, combo, preds, free, span, platform)
        if starts is not None:
            witness = {
                t.task_id: (vm, lv, window.start + s) for t, (vm, lv), s in zip(tasks, combo, starts)
            }
            return OptimalResult(reward, witness)
    return OptimalResult(None, None)


def _place_all(tasks, combo, preds, free, span, platform) -> Optional[list[int]]:
    n = len(tasks)
    durs = [t.time(vm, lv) for t, (vm, lv) in zip(tasks, combo)]
    starts = [0] * n
    avail = dict(free)

    def go(i: int) -> bool:
        if i == n:
            return True
        vm = combo[i][0]
        d = durs[i]
        lb = 0
        for j, vol in preds[i]:
            lb = max(lb, starts[j] + durs[j] + _delay(vol, combo[j][0], vm, platform))
        block = (1 << d) - 1
        for s in range(lb, span - d + 1):
            bits = block << s
            if avail[vm] & bits == bits:
                starts[i] = s
                avail[vm] ^= bits
                ok = go(i + 1)
                avail[vm] ^= bits
                if ok:
                    return True
        return False

    return list(starts) if go(0) else None
