from fractions import Fraction

from hypothesis import given, settings, strategies as st

from conftest import make_diamond
from gapsched.generator import GenParams, generate_dag
from gapsched.platform import make_platform
from gapsched.ranking import priority_order, upward_ranks
from gapsched.workload import DagSpec, EdgeSpec, make_task

P2 = make_platform(["V1", "V2"], 12)  # unit bandwidth, so mean comm cost = volume


def dag_of(times, edges):
    tasks = tuple(make_task(t, {"V1": (a,), "V2": (b,)}) for t, (a, b) in times.items())
    return DagSpec("g", tasks, tuple(EdgeSpec(s, d, Fraction(v)) for s, d, v in edges), 20)


def test_single_exit_task_rank_is_mean_cost():
    assert upward_ranks(dag_of({"A": (2, 4)}, []), P2) == {"A": 3}


def test_chain():
    ranks = upward_ranks(dag_of({"A": (2, 2), "B": (3, 3)}, [("A", "B", 1)]), P2)
    assert ranks == {"A": 6, "B": 3}


def test_fork_takes_max_successor():
    ranks = upward_ranks(
        dag_of({"A": (1, 1), "B": (5, 5), "C": (2, 2)}, [("A", "B", 1), ("A", "C", 1)]), P2
    )
    assert ranks["A"] == 1 + max(1 + 5, 1 + 2) == 7


def test_priority_ties_by_id():
    assert priority_order({"A": Fraction(6), "B": Fraction(3)}) == ["A", "B"]
    assert priority_order({"B": Fraction(5), "A": Fraction(5)}) == ["A", "B"]


def _respects_edges(order, dag):
    pos = {t: i for i, t in enumerate(order)}
    return all(pos[e.src] < pos[e.dst] for e in dag.edges)


def test_diamond_priority_is_topological():
    dag = make_diamond()
    order = priority_order(upward_ranks(dag, P2))
    assert _respects_edges(order, dag)
    assert order[0] == "T1" and order[-1] == "T4"


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(0, 10_000), st.floats(0, 1))
def test_priority_respects_precedence_on_random_dags(n, seed, density):
    dag = generate_dag(GenParams(n, edge_density=density, seed=seed, n_vms=2))
    assert _respects_edges(priority_order(upward_ranks(dag, P2)), dag)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 20), st.integers(0, 10_000), st.integers(2, 5))
def test_scaling_multiplies_ranks_and_keeps_order(n, seed, k):
    dag = generate_dag(GenParams(n, seed=seed, n_vms=2))
    scaled = DagSpec(
        dag.dag_id,
        tuple(make_task(t.task_id, {vm: tuple(k * x for x in ts) for vm, ts in t.exec_time.items()}) for t in dag.tasks),
        tuple(EdgeSpec(e.src, e.dst, k * e.data_volume) for e in dag.edges),
        dag.period,
    )
    r1, r2 = upward_ranks(dag, P2), upward_ranks(scaled, P2)
    assert all(r2[t] == k * r1[t] for t in r1)
    assert priority_order(r1) == priority_order(r2)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 15), st.integers(0, 10_000), st.data())
def test_adding_edge_never_lowers_source_rank(n, seed, data):
    dag = generate_dag(GenParams(n, seed=seed, n_vms=2))
    order = dag.topological_order()
    i = data.draw(st.integers(0, n - 2))
    j = data.draw(st.integers(i + 1, n - 1))
    src, dst = order[i], order[j]
    more = DagSpec(dag.dag_id, dag.tasks, dag.edges + (EdgeSpec(src, dst, Fraction(3)),), dag.period)
    assert upward_ranks(more, P2)[src] >= upward_ranks(dag, P2)[src]
