import numpy as np
import pytest

from dynaflow.graph import DirectedGraph, Graph, build_graph, chi, precondition
from dynaflow import oracles

from conftest import random_connected_graph, random_digraph, random_resistances


def test_dense_flow_single_edge():
    g = build_graph([(0, 1, 1)], 2, 0, 1)
    f, phi, energy = oracles.dense_electric_flow(g, [1.0], chi(2, 0, 1))
    assert np.allclose(f, [1.0])
    assert abs((phi[1] - phi[0]) - 1.0) < 1e-12
    assert abs(energy - 1.0) < 1e-12


def test_dense_flow_parallel_pair():
    g = build_graph([(0, 1, 1), (0, 1, 1)], 2, 0, 1)
    f, _, energy = oracles.dense_electric_flow(g, [1.0, 1.0], chi(2, 0, 1))
    assert np.allclose(f, [0.5, 0.5])
    assert abs(energy - 0.5) < 1e-12


def test_dense_flow_triangle_split():
    # direct edge r=1 vs 2-hop path r=1+1: currents 2/3 and 1/3
    g = build_graph([(0, 1, 1), (0, 2, 1), (2, 1, 1)], 3, 0, 1)
    f, _, energy = oracles.dense_electric_flow(g, [1.0, 1.0, 1.0], chi(3, 0, 1))
    assert np.allclose(f, [2 / 3, 1 / 3, 1 / 3])
    assert abs(energy - 2 / 3) < 1e-12


def test_dinic_single_edge():
    g = build_graph([(0, 1, 5)], 2, 0, 1)
    assert dinic_value(g) == 5


def dinic_value(g):
    v, _ = oracles.dinic_maxflow(g)
    return v


def test_dinic_bipartite_k33():
    # K_{3,3} with unit caps and super source/sink: value 3
    arcs = []
    s, t = 6, 7
    for i in range(3):
        arcs.append((s, i, 1))
        arcs.append((i + 3, t, 1))
    for i in range(3):
        for j in range(3):
            arcs.append((i, j + 3, 1))
    dg = DirectedGraph(8, tuple(arcs), s, t)
    v, _ = oracles.dinic_maxflow(dg)
    assert v == 3


def test_dinic_on_preconditioned():
    gen = np.random.default_rng(5)
    g = random_connected_graph(gen, 4, 10, cap_hi=7)
    U = int(g.capacities.max())
    assert dinic_value(precondition(g, U)) == dinic_value(g) + 2 * g.m * U


@pytest.mark.parametrize("seed", range(20))
def test_dinic_matches_brute_force(seed):
    gen = np.random.default_rng(seed)
    n = int(gen.integers(3, 6))
    arcs = []
    for _ in range(int(gen.integers(2, 7))):
        a, b = gen.integers(0, n, size=2)
        if a == b:
            continue
        arcs.append((int(a), int(b), int(gen.integers(1, 4))))
    if not arcs:
        arcs = [(0, 1, 1)]
    dg = DirectedGraph(n, tuple(arcs), 0, n - 1)
    v, _ = oracles.dinic_maxflow(dg)
    assert v == oracles.brute_force_maxflow_value(dg)


def test_hitting_probabilities_path():
    g = build_graph([(0, 1, 1), (1, 2, 1)], 3, 0, 2)
    P = oracles.hitting_probabilities(g, [1.0, 1.0], [0, 2])
    assert np.allclose(P[1], [0.5, 0.5])
    assert np.allclose(P[0], [1.0, 0.0])
    assert np.allclose(P.sum(axis=1), 1.0)


def test_hitting_probabilities_rows_sum_to_one(gen):
    g = random_connected_graph(gen, 5, 20)
    r = random_resistances(gen, g.m)
    C = sorted(gen.choice(g.n, size=3, replace=False).tolist())
    P = oracles.hitting_probabilities(g, r, C)
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-9)


def test_exact_projection_supported_on_C():
    g = build_graph([(0, 1, 1), (1, 2, 1)], 3, 0, 2)
    d = np.array([1.0, 0.0, -1.0])
    pi = oracles.exact_projection(g, [1.0, 1.0], [0, 2], d)
    assert np.allclose(pi, [1.0, -1.0])


def test_exact_projection_linear(gen):
    g = random_connected_graph(gen, 5, 15)
    r = random_resistances(gen, g.m)
    C = sorted(gen.choice(g.n, size=3, replace=False).tolist())
    d1 = gen.normal(size=g.n)
    d2 = gen.normal(size=g.n)
    p = oracles.exact_projection
    assert np.allclose(p(g, r, C, d1 + 2 * d2), p(g, r, C, d1) + 2 * p(g, r, C, d2))


@pytest.mark.parametrize("seed", range(10))
def test_projection_agrees_with_hitting_mass(seed):
    # pi^C(d)_v == sum_u d_u p^C_v(u)
    gen = np.random.default_rng(seed)
    g = random_connected_graph(gen, 4, 14)
    r = random_resistances(gen, g.m)
    k = int(gen.integers(2, min(5, g.n)))
    C = sorted(gen.choice(g.n, size=k, replace=False).tolist())
    d = gen.normal(size=g.n)
    P = oracles.hitting_probabilities(g, r, C)
    assert np.allclose(oracles.exact_projection(g, r, C, d), d @ P, atol=1e-8)


def test_schur_full_set_is_laplacian(gen):
    g = random_connected_graph(gen, 4, 10)
    r = random_resistances(gen, g.m)
    S = oracles.exact_schur(g, r, range(g.n))
    assert np.allclose(S, oracles.dense_laplacian(g, r))


def test_schur_path_elimination():
    g = build_graph([(0, 1, 1), (1, 2, 1)], 3, 0, 2)
    S = oracles.exact_schur(g, [1.0, 1.0], [0, 2])
    assert np.allclose(S, [[0.5, -0.5], [-0.5, 0.5]])


def test_schur_star_clique():
    # star center 3, leaves 0,1,2 with conductances w: clique w_i w_j / sum(w)
    w = np.array([1.0, 2.0, 4.0])
    g = build_graph([(3, 0, 1), (3, 1, 1), (3, 2, 1)], 4, 0, 1)
    S = oracles.exact_schur(g, 1.0 / w, [0, 1, 2])
    tot = w.sum()
    for i in range(3):
        for j in range(3):
            if i != j:
                assert abs(-S[i, j] - w[i] * w[j] / tot) < 1e-12


def test_central_point_zero_at_mu_eq_Fstar():
    g = build_graph([(0, 1, 5), (0, 1, 10)], 2, 0, 1)
    f = oracles.exact_central_point(g, g.capacities.astype(float), 5.0, 5.0)
    assert np.allclose(f, 0.0, atol=1e-9)


def test_central_point_routes_demand():
    gen = np.random.default_rng(11)
    g = random_connected_graph(gen, 4, 8, cap_hi=6)
    g = precondition(g, int(g.capacities.max()))
    u = g.capacities.astype(float)
    vmax, _ = oracles.dinic_maxflow(g)
    mu = 0.25 * vmax
    f = oracles.exact_central_point(g, u, float(vmax), mu)
    from dynaflow.graph import Flow, divergence

    d = divergence(g, Flow(f)).values
    want = (vmax - mu) * chi(g.n, g.s, g.t)
    assert np.allclose(d, want, atol=1e-7)
    assert (np.abs(f) < u).all()


def test_oracle_self_consistency_energy(gen):
    g = random_connected_graph(gen, 5, 20)
    r = random_resistances(gen, g.m)
    d = chi(g.n, g.s, g.t)
    f, phi, energy = oracles.dense_electric_flow(g, r, d)
    L = oracles.dense_laplacian(g, r)
    assert abs(energy - d @ np.linalg.pinv(L) @ d) < 1e-10
    assert abs(energy - float((r * f * f).sum())) < 1e-10


def test_oracle_size_cap():
    with pytest.raises(Exception, match="cap"):
        oracles._check_size(500)
