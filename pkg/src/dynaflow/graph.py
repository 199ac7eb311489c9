"""Undirected multigraph core: incidence operators, preconditioning, and the
directed-to-undirected front door.

Conventions (used consistently everywhere):
  * an edge is (tail, head, capacity); flow is positive from tail to head;
  * (B phi)_e = phi[head] - phi[tail];
  * (B^T f)_v = sum of f over edges with head v minus edges with tail v,
    so routing F units from s to t means B^T f = F * chi_st with
    chi_st = -1 at s and +1 at t;
  * edge ids are positions in the edge list and are stable under every
    operation (preconditioning appends, never renumbers).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class GraphError(ValueError):
    """Input violates a structural assumption (names the violated one)."""


@dataclass(frozen=True)
class DirectedGraph:
    """Directed multigraph instance for the front door and the Dinic oracle."""

    n: int
    arcs: tuple[tuple[int, int, int], ...]  # (tail, head, capacity)
    s: int
    t: int

    def __post_init__(self):
        if not (0 <= self.s < self.n and 0 <= self.t < self.n):
            raise GraphError("s/t out of range")
        if self.s == self.t:
            raise GraphError("s equals t")
        for a, b, c in self.arcs:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise GraphError("arc endpoint out of range")
            if int(c) != c or c <= 0:
                raise GraphError("nonpositive capacity: arc capacities must be positive integers")


class Graph:
    """Undirected multigraph with per-edge capacities and stable edge ids.

    Instances are immutable after construction; operations that change the
    edge set (preconditioning) return new instances.  Parallel edges are
    first class.
    """

    __slots__ = (
        "n", "s", "t", "tails", "heads", "capacities", "preconditioned_from",
        "inc_offsets", "inc_edges", "inc_other",
    )

    def __init__(self, n, edges, s, t, preconditioned_from=None):
        if n < 2:
            raise GraphError("need at least two vertices (n >= 2)")
        if len(edges) < 1:
            raise GraphError("need at least one edge (m >= 1)")
        if not (0 <= s < n and 0 <= t < n):
            raise GraphError("s/t out of range")
        if s == t:
            raise GraphError("s equals t")
        tails = np.asarray([e[0] for e in edges], dtype=np.int64)
        heads = np.asarray([e[1] for e in edges], dtype=np.int64)
        caps = [e[2] for e in edges]
        if (tails < 0).any() or (tails >= n).any() or (heads < 0).any() or (heads >= n).any():
            raise GraphError("edge endpoint out of range")
        if (tails == heads).any():
            raise GraphError("self loop")
        for c in caps:
            if c <= 0 or int(c) != c:
                raise GraphError("nonpositive capacity: capacities must be positive integers")
        self.n = int(n)
        self.s = int(s)
        self.t = int(t)
        self.tails = tails
        self.heads = heads
        self.capacities = np.asarray([int(c) for c in caps], dtype=np.int64)
        self.preconditioned_from = preconditioned_from

        deg = np.zeros(n, dtype=np.int64)
        np.add.at(deg, tails, 1)
        np.add.at(deg, heads, 1)
        if (deg == 0).any():
            raise GraphError("isolated vertex: every vertex must be incident to an edge")

        # incidence CSR: for each vertex, incident edge ids and the far endpoint
        m = len(edges)
        order = np.argsort(np.concatenate([tails, heads]), kind="stable")
        inc_edge = np.concatenate([np.arange(m), np.arange(m)])[order]
        inc_other = np.concatenate([heads, tails])[order]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=offsets[1:])
        self.inc_offsets = offsets
        self.inc_edges = inc_edge
        self.inc_other = inc_other

        if not self._connected():
            raise GraphError("disconnected")

    @property
    def m(self) -> int:
        return len(self.tails)

    def degrees(self) -> np.ndarray:
        return self.inc_offsets[1:] - self.inc_offsets[:-1]

    def _connected(self) -> bool:
        seen = np.zeros(self.n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            v = stack.pop()
            lo, hi = self.inc_offsets[v], self.inc_offsets[v + 1]
            for u in self.inc_other[lo:hi]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(int(u))
        return bool(seen.all())

    def edge_list(self):
        return list(zip(self.tails.tolist(), self.heads.tolist(), self.capacities.tolist()))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m}, s={self.s}, t={self.t})"


@dataclass
class Flow:
    """Per-edge signed flow, positive from tail to head."""

    values: np.ndarray

    def assert_feasible(self, graph: Graph, slack: float = 0.0):
        u = graph.capacities.astype(float)
        if not (np.abs(np.asarray(self.values, dtype=float)) <= u + slack).all():
            raise GraphError("flow violates capacities")


@dataclass
class Demand:
    """Per-vertex demand; entries sum to zero for routable demands."""

    values: np.ndarray

    def assert_zero_sum(self, tol: float = 1e-9):
        v = np.asarray(self.values, dtype=float)
        if abs(v.sum()) > tol * max(1.0, np.abs(v).sum()):
            raise GraphError("demand does not sum to zero")


def build_graph(edge_list, n, s, t) -> Graph:
    """Validated Graph from an explicit edge list."""
    return Graph(n, edge_list, s, t)


def chi(n: int, a: int, b: int) -> np.ndarray:
    """chi_ab: -1 at a, +1 at b."""
    v = np.zeros(n)
    v[a] -= 1.0
    v[b] += 1.0
    return v


def incidence_apply(graph: Graph, potentials) -> np.ndarray:
    """(B phi)_e = phi[head] - phi[tail]."""
    phi = np.asarray(potentials, dtype=float)
    if phi.shape != (graph.n,):
        raise GraphError("potentials length mismatch")
    return phi[graph.heads] - phi[graph.tails]


def divergence(graph: Graph, flow) -> Demand:
    """B^T f as a per-vertex Demand (always sums to zero)."""
    f = flow.values if isinstance(flow, Flow) else np.asarray(flow)
    if f.shape != (graph.m,):
        raise GraphError("flow length mismatch")
    out = np.zeros(graph.n, dtype=float if f.dtype.kind == "f" else np.int64)
    np.add.at(out, graph.heads, f)
    np.subtract.at(out, graph.tails, f)
    return Demand(out)


def precondition(graph: Graph, U: int) -> Graph:
    """Append m parallel (s,t) edges of capacity 2U.

    Raises the optimum by exactly 2mU and guarantees the residual and energy
    bounds the interior point method relies on.  Edge ids 0..m-1 are
    unchanged; the new edges get ids m..2m-1.
    """
    if graph.preconditioned_from is not None:
        raise GraphError("already preconditioned")
    if (graph.capacities > U).any():
        raise GraphError("capacity exceeds stated bound U")
    m = graph.m
    edges = graph.edge_list() + [(graph.s, graph.t, 2 * U)] * m
    return Graph(graph.n, edges, graph.s, graph.t, preconditioned_from=m)


# ---------------------------------------------------------------------------
# directed -> undirected reduction
# ---------------------------------------------------------------------------
#
# Per arc (a, b, c) we add up to three undirected edges, each of capacity c:
#     {a, b}   ("main"),   {s, b}   ("src"),   {a, t}   ("snk"),
# skipping the degenerate self loops {s,s} (arcs into s) and {t,t} (arcs out
# of t).  A cut computation shows the undirected optimum satisfies
#     F_und = 2 * F_dir + sum(c)
# exactly, including the skipped-loop cases, so the directed value is
# recovered as (F_und - sum(c)) / 2.


@dataclass
class DirectedRecovery:
    """Maps an optimal undirected flow of the gadget graph back to a directed flow."""

    digraph: DirectedGraph
    cap_total: int
    main_edge_of_arc: dict  # arc index -> undirected edge id (None for dropped self loops)

    def directed_value(self, undirected_value) -> int:
        v = Fraction(undirected_value) - self.cap_total
        if v < 0:
            v = Fraction(0)
        if v % 2 != 0:
            raise GraphError("undirected value has wrong parity for recovery")
        return int(v / 2)

    def recover(self, undirected_flow_values) -> tuple[int, list[Fraction]]:
        """Directed feasible flow matching the directed optimum.

        Starts from the capacity-feasible pseudoflow (g_main + c) / 2, trims
        it to a conserving s-t flow by path extraction, then closes any gap
        with BFS augmenting paths on the directed residual graph.
        """
        dg = self.digraph
        g = np.asarray(undirected_flow_values, dtype=float)
        f = {}
        for k, (a, b, c) in enumerate(dg.arcs):
            e = self.main_edge_of_arc.get(k)
            if e is None:
                f[k] = Fraction(0)
            else:
                val = (Fraction(g[e]).limit_denominator(1 << 30) + c) / 2
                f[k] = min(max(val, Fraction(0)), Fraction(c))
        f = _trim_to_flow(dg, f)
        target = _augment_to_max(dg, f)
        return target, [f[k] for k in range(len(dg.arcs))]


def directed_to_undirected(digraph: DirectedGraph) -> tuple[Graph, DirectedRecovery]:
    """Reduce directed maxflow to undirected maxflow with the 3-edge gadget."""
    edges = []
    main_of = {}
    cap_total = 0
    s, t = digraph.s, digraph.t
    for k, (a, b, c) in enumerate(digraph.arcs):
        if a == b:
            main_of[k] = None
            continue  # directed self loops never carry s-t flow
        cap_total += c
        main_of[k] = len(edges)
        edges.append((a, b, c))
        if b != s:
            edges.append((s, b, c))
        if a != t:
            edges.append((a, t, c))
    if not edges:
        raise GraphError("no usable arcs")
    g = Graph(digraph.n, edges, s, t)
    return g, DirectedRecovery(digraph, cap_total, main_of)


def _adjacency(dg: DirectedGraph):
    out_arcs = [[] for _ in range(dg.n)]
    in_arcs = [[] for _ in range(dg.n)]
    for k, (a, b, _) in enumerate(dg.arcs):
        out_arcs[a].append(k)
        in_arcs[b].append(k)
    return out_arcs, in_arcs


def _trim_to_flow(dg: DirectedGraph, f: dict) -> dict:
    """Keep only the s->t path part of a capacity-feasible pseudoflow."""
    out_arcs, _ = _adjacency(dg)
    kept = {k: Fraction(0) for k in f}
    work = dict(f)
    while True:
        # BFS from s through positive support
        prev = {dg.s: None}
        queue = [dg.s]
        while queue and dg.t not in prev:
            v = queue.pop(0)
            for k in out_arcs[v]:
                if work[k] > 0 and dg.arcs[k][1] not in prev:
                    prev[dg.arcs[k][1]] = k
                    queue.append(dg.arcs[k][1])
        if dg.t not in prev:
            break
        path = []
        v = dg.t
        while v != dg.s:
            k = prev[v]
            path.append(k)
            v = dg.arcs[k][0]
        w = min(work[k] for k in path)
        for k in path:
            work[k] -= w
            kept[k] += w
    return kept


def _augment_to_max(dg: DirectedGraph, f: dict) -> int:
    """BFS augmenting paths on the residual graph until no path remains.

    Mutates `f` in place; returns the final (integral) flow value.
    """
    out_arcs, in_arcs = _adjacency(dg)
    while True:
        prev = {dg.s: None}
        queue = [dg.s]
        while queue and dg.t not in prev:
            v = queue.pop(0)
            for k in out_arcs[v]:
                b = dg.arcs[k][1]
                if b not in prev and f[k] < dg.arcs[k][2]:
                    prev[b] = (k, +1)
                    queue.append(b)
            for k in in_arcs[v]:
                a = dg.arcs[k][0]
                if a not in prev and f[k] > 0:
                    prev[a] = (k, -1)
                    queue.append(a)
        if dg.t not in prev:
            break
        v = dg.t
        path = []
        while v != dg.s:
            k, sign = prev[v]
            path.append((k, sign))
            v = dg.arcs[k][0] if sign > 0 else dg.arcs[k][1]
        w = min(
            (dg.arcs[k][2] - f[k]) if sign > 0 else f[k]
            for k, sign in path
        )
        for k, sign in path:
            f[k] += sign * w
    value = sum(f[k] for k in range(len(dg.arcs)) if dg.arcs[k][1] == dg.t) - sum(
        f[k] for k in range(len(dg.arcs)) if dg.arcs[k][0] == dg.t
    )
    assert value == int(value)
    return int(value)
