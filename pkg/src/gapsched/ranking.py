"""Upward ranks and the HEFT priority list."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .platform import Platform
from .workload import DagSpec, mean_comm_cost


def mean_base_cost(dag: DagSpec, task_id: str, platform: Platform) -> Fraction:
    task = dag.task_map[task_id]
    vms = platform.vm_ids
    return Fraction(sum(task.time(vm, 1) for vm in vms), len(vms))


def upward_ranks(dag: DagSpec, platform: Platform) -> dict[str, Fraction]:
    """rank(i) = mean base cost of i + max over children j of (mean comm cost + rank(j)).

    Exact rationals throughout so that equal ranks compare equal.
    """
    ranks: dict[str, Fraction] = {}
    for tid in reversed(dag.topological_order()):
        tail = Fraction(0)
        for e in dag.out_edges[tid]:
            tail = max(tail, mean_comm_cost(e, platform) + ranks[e.dst])
        ranks[tid] = mean_base_cost(dag, tid, platform) + tail
    return ranks


def priority_order(ranks: Mapping[str, Fraction]) -> list[str]:
    """Descending rank, ties by ascending task id."""
    return sorted(ranks, key=lambda tid: (-ranks[tid], tid))
