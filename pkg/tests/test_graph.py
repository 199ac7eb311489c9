import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynaflow import graph as G
from dynaflow.graph import (
    DirectedGraph, Flow, GraphError, build_graph, chi, directed_to_undirected,
    divergence, incidence_apply, precondition,
)
from dynaflow.oracles import dinic_maxflow

from conftest import random_digraph


def test_build_single_edge():
    g = build_graph([(0, 1, 5)], 2, 0, 1)
    assert g.m == 1 and g.n == 2


def test_build_rejects_disconnected():
    with pytest.raises(GraphError, match="disconnected"):
        build_graph([(0, 1, 1), (2, 3, 1)], 4, 0, 1)


def test_build_triangle():
    g = build_graph([(0, 1, 1), (1, 2, 1), (0, 2, 1)], 3, 0, 1)
    assert g.m == 3


def test_build_rejects_bad_caps():
    with pytest.raises(GraphError, match="capacity"):
        build_graph([(0, 1, 0)], 2, 0, 1)
    with pytest.raises(GraphError, match="capacity"):
        build_graph([(0, 1, -3)], 2, 0, 1)


def test_build_rejects_isolated_vertex():
    with pytest.raises(GraphError):
        build_graph([(0, 1, 1)], 3, 0, 1)


def test_incidence_constant_is_zero():
    g = build_graph([(0, 1, 1), (1, 2, 1), (0, 2, 1)], 3, 0, 1)
    assert np.allclose(incidence_apply(g, np.full(3, 7.0)), 0.0)


def test_incidence_single_edge():
    g = build_graph([(0, 1, 1)], 2, 0, 1)
    assert incidence_apply(g, np.array([0.0, 1.0]))[0] == 1.0


def test_incidence_cycle_telescopes():
    g = build_graph([(0, 1, 1), (1, 2, 1), (2, 0, 1)], 3, 0, 1)
    d = incidence_apply(g, np.array([0.0, 1.0, 2.0]))
    assert abs(d.sum()) < 1e-12  # differences telescope around the cycle


def test_incidence_length_mismatch():
    g = build_graph([(0, 1, 1)], 2, 0, 1)
    with pytest.raises(GraphError):
        incidence_apply(g, np.zeros(3))


def test_divergence_unit_edge():
    g = build_graph([(0, 1, 5)], 2, 0, 1)
    d = divergence(g, Flow(np.array([1.0])))
    assert np.allclose(d.values, chi(2, 0, 1))


def test_divergence_circulation_is_zero():
    g = build_graph([(0, 1, 1), (1, 2, 1), (2, 0, 1)], 3, 0, 1)
    d = divergence(g, Flow(np.array([1.0, 1.0, 1.0])))
    assert np.allclose(d.values, 0.0)


def test_divergence_parallel_split():
    g = build_graph([(0, 1, 1), (0, 1, 1)], 2, 0, 1)
    d = divergence(g, Flow(np.array([0.5, 0.5])))
    assert np.allclose(d.values, chi(2, 0, 1))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_divergence_always_sums_to_zero(seed):
    gen = np.random.default_rng(seed)
    from conftest import random_connected_graph

    g = random_connected_graph(gen, 4, 12)
    f = gen.normal(size=g.m)
    assert abs(divergence(g, Flow(f)).values.sum()) < 1e-9


def test_precondition_single_edge():
    g = build_graph([(0, 1, 5)], 2, 0, 1)
    pg = precondition(g, 5)
    assert pg.m == 2 and pg.preconditioned_from == 1
    assert pg.edge_list()[1] == (0, 1, 10)
    value, _ = dinic_maxflow(pg)
    assert value == 15  # 5 + 2 m U


def test_precondition_triangle_count():
    g = build_graph([(0, 1, 1), (1, 2, 1), (0, 2, 1)], 3, 0, 1)
    pg = precondition(g, 1)
    assert pg.m == 6
    assert sum(1 for a, b, c in pg.edge_list()[3:] if c == 2) == 3


def test_precondition_rejects_twice():
    g = build_graph([(0, 1, 5)], 2, 0, 1)
    with pytest.raises(GraphError, match="already"):
        precondition(precondition(g, 5), 5)


@pytest.mark.parametrize("seed", range(4))
def test_precondition_adds_exactly_2mU(seed):
    from conftest import random_connected_graph

    gen = np.random.default_rng(seed)
    g = random_connected_graph(gen, 4, 12, cap_hi=9)
    U = int(g.capacities.max())
    before, _ = dinic_maxflow(g)
    after, _ = dinic_maxflow(precondition(g, U))
    assert after == before + 2 * g.m * U


def test_directed_single_arc():
    dg = DirectedGraph(2, ((0, 1, 3),), 0, 1)
    ug, rec = directed_to_undirected(dg)
    val, flows = dinic_maxflow(ug)
    assert rec.directed_value(val) == 3
    v, df = rec.recover(flows)
    assert v == 3


def test_directed_antiparallel_pair():
    dg = DirectedGraph(2, ((0, 1, 2), (1, 0, 2)), 0, 1)
    ug, rec = directed_to_undirected(dg)
    val, flows = dinic_maxflow(ug)
    assert rec.directed_value(val) == 2
    v, _ = rec.recover(flows)
    assert v == 2


def test_directed_backward_arc_only():
    dg = DirectedGraph(2, ((1, 0, 4),), 0, 1)
    ug, rec = directed_to_undirected(dg)
    val, flows = dinic_maxflow(ug)
    assert rec.directed_value(val) == 0
    v, _ = rec.recover(flows)
    assert v == 0


@pytest.mark.parametrize("seed", range(25))
def test_directed_reduction_matches_dinic(seed):
    gen = np.random.default_rng(1000 + seed)
    dg = random_digraph(gen, 4, 20)
    want, _ = dinic_maxflow(dg)
    ug, rec = directed_to_undirected(dg)
    val, flows = dinic_maxflow(ug)
    assert rec.directed_value(val) == want
    got, df = rec.recover(flows)
    assert got == want
    # recovered flow is feasible and conserving
    div = [0] * dg.n
    for (a, b, c), fv in zip(dg.arcs, df):
        assert 0 <= fv <= c
        div[b] += fv
        div[a] -= fv
    for v in range(dg.n):
        if v not in (dg.s, dg.t):
            assert div[v] == 0
    assert div[dg.t] == want
