import numpy as np
import pytest

from dynaflow.graph import DirectedGraph, Graph
from dynaflow.rng import RngStream


def random_connected_graph(gen, n_lo=5, n_hi=30, extra_edges=None, cap_hi=20):
    """Random connected undirected multigraph (spanning tree plus extras)."""
    n = int(gen.integers(n_lo, n_hi + 1))
    edges = []
    order = gen.permutation(n)
    for i in range(1, n):
        a = int(order[int(gen.integers(0, i))])
        b = int(order[i])
        edges.append((a, b, int(gen.integers(1, cap_hi + 1))))
    if extra_edges is None:
        extra_edges = int(gen.integers(0, 2 * n))
    for _ in range(extra_edges):
        a, b = gen.integers(0, n, size=2)
        if a == b:
            continue
        edges.append((int(a), int(b), int(gen.integers(1, cap_hi + 1))))
    s, t = gen.choice(n, size=2, replace=False)
    return Graph(n, edges, int(s), int(t))


def random_digraph(gen, n_lo=4, n_hi=20, cap_hi=10):
    n = int(gen.integers(n_lo, n_hi + 1))
    arcs = []
    order = gen.permutation(n)
    for i in range(1, n):
        a = int(order[int(gen.integers(0, i))])
        b = int(order[i])
        if gen.random() < 0.5:
            a, b = b, a
        arcs.append((a, b, int(gen.integers(1, cap_hi + 1))))
    for _ in range(int(gen.integers(n, 3 * n))):
        a, b = gen.integers(0, n, size=2)
        if a == b:
            continue
        arcs.append((int(a), int(b), int(gen.integers(1, cap_hi + 1))))
    s, t = gen.choice(n, size=2, replace=False)
    return DirectedGraph(n, tuple(arcs), int(s), int(t))


def random_resistances(gen, m, lo=0.1, hi=10.0):
    return np.exp(gen.uniform(np.log(lo), np.log(hi), size=m))


@pytest.fixture
def rng():
    return RngStream(20260809)


@pytest.fixture
def gen():
    return np.random.default_rng(20260809)
