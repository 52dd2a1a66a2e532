from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_diamond
from gapsched.generator import GenParams, OccupancyParams, apply_ccr, generate_dag, generate_preoccupation
from gapsched.heft import CycleWindow, ScheduleEntry
from gapsched.metrics import IntegrityError, normalized_reward, schedule_stats
from gapsched.periodic import Failure, HyperSchedule, schedule_periodic
from gapsched.platform import make_platform
from gapsched.workload import TaskInstance, instantiate_cycle


def all_at(dag, level, cycles=(0, 1), failed=()):
    entries = []
    for k in cycles:
        if k in failed:
            continue
        _, mapping = instantiate_cycle(dag, k)
        for i, (tid, inst) in enumerate(sorted(mapping.items())):
            start = 12 * k + 3 * i
            entries.append(ScheduleEntry(inst, "V1", level, start, start + dag.task_map[tid].time("V1", level)))
    return HyperSchedule(
        hyperperiod=24,
        horizon=24,
        entries=tuple(entries),
        windows={(dag.dag_id, k): CycleWindow(12 * k, 12 * k + 12) for k in cycles},
        failures=tuple(Failure(dag.dag_id, k, "test") for k in failed),
    )


def test_full_quality_is_100_percent(diamond):
    assert normalized_reward(all_at(diamond, 2), [diamond]).nr_percent == 100


def test_all_base_two_instances(diamond):
    r = normalized_reward(all_at(diamond, 1), [diamond])
    assert (r.r_act, r.r_max, r.nr_percent) == (8, 16, 50)


def test_failed_instance_is_nullified(diamond):
    r = normalized_reward(all_at(diamond, 1, failed=(1,)), [diamond])
    assert (r.r_act, r.r_max, r.nr_percent, r.nullified_instances) == (4, 16, 25, 1)


def test_unknown_task_is_integrity_error(diamond):
    hs = all_at(diamond, 1)
    bogus = ScheduleEntry(TaskInstance("x", "T9", "diamond", 0), "V1", 1, 0, 1)
    with pytest.raises(IntegrityError):
        normalized_reward(replace(hs, entries=hs.entries + (bogus,)), [diamond])


def test_stats_empty_schedule():
    p = make_platform(["V1"], 8, idle={"V1": [(0, 5)]})
    s = schedule_stats(HyperSchedule(8, 8), p)
    assert (s.busy["V1"], s.idle["V1"], s.preoccupied["V1"]) == (0, 5, 3)


def test_stats_single_entry():
    p = make_platform(["V1"], 24)
    e = ScheduleEntry(TaskInstance("a", "a", "g", 0), "V1", 1, 0, 3)
    s = schedule_stats(HyperSchedule(24, 24, (e,), {("g", 0): CycleWindow(0, 24)}), p)
    assert (s.busy["V1"], s.idle["V1"]) == (3, 21)
    assert s.makespan[("g", 0)] == 3


def test_stats_conserve_ticks_on_diamond():
    dag = make_diamond()
    p = generate_preoccupation(OccupancyParams(2, Fraction(3, 10), background_period=8, seed=0))
    hs = schedule_periodic([dag], p)
    s = schedule_stats(hs, p)
    assert sum(s.busy.values()) == sum(e.finish - e.start for e in hs.entries)
    for vm in p.vm_ids:
        assert s.busy[vm] + s.idle[vm] + s.preoccupied[vm] == hs.hyperperiod


def _run(seed, n):
    p = generate_preoccupation(OccupancyParams(3, Fraction(3, 10), seed=seed))
    dag = apply_ccr(generate_dag(GenParams(n, seed=seed, n_vms=3)), Fraction(1, 2), p)
    return dag, p, schedule_periodic([dag], p)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 20), st.integers(2, 7))
def test_reward_properties(seed, n, k):
    dag, _, hs = _run(seed, n)
    r = normalized_reward(hs, [dag])
    assert 0 <= r.nr_percent <= 100 and r.r_act <= r.r_max
    assert r.r_act == sum(a for a, _ in r.per_dag.values())
    assert normalized_reward(hs, [dag], hs.base_entries).nr_percent <= r.nr_percent

    scaled = replace(
        dag,
        tasks=tuple(replace(t, versions=tuple(replace(v, reward=v.reward * k) for v in t.versions)) for t in dag.tasks),
    )
    assert normalized_reward(hs, [scaled]).nr_percent == r.nr_percent
