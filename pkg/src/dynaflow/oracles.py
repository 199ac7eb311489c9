"""Slow, exact reference implementations.

Everything here is dense, unoptimized by policy, and capped at n <= 200.
These are the ground truth for the randomized components; none of them share
code with the fast paths they validate.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .graph import DirectedGraph, Graph, GraphError, chi

ORACLE_N_CAP = 200


def _check_size(n):
    if n > ORACLE_N_CAP:
        raise GraphError(f"oracle size cap exceeded: n={n} > {ORACLE_N_CAP}")


def dense_laplacian(graph: Graph, r) -> np.ndarray:
    """Dense L = B^T R^{-1} B."""
    _check_size(graph.n)
    r = np.asarray(r, dtype=float)
    L = np.zeros((graph.n, graph.n))
    w = 1.0 / r
    for a, b, we in zip(graph.tails, graph.heads, w):
        L[a, a] += we
        L[b, b] += we
        L[a, b] -= we
        L[b, a] -= we
    return L


def dense_electric_flow(graph: Graph, r, demand):
    """(flow, potentials, energy) via pseudo-inverse, exact to factorization precision."""
    _check_size(graph.n)
    r = np.asarray(r, dtype=float)
    d = np.asarray(demand, dtype=float)
    L = dense_laplacian(graph, r)
    phi = np.linalg.pinv(L, hermitian=True) @ d
    phi -= phi.mean()
    f = (phi[graph.heads] - phi[graph.tails]) / r
    energy = float(d @ phi)
    return f, phi, energy


def dense_effective_resistance(graph: Graph, r, a, b) -> float:
    _, phi, energy = dense_electric_flow(graph, r, chi(graph.n, a, b))
    return energy


def edge_energies(graph: Graph, r, flow) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    f = np.asarray(flow, dtype=float)
    return r * f * f


# ---------------------------------------------------------------------------
# Dinic maxflow (directed and undirected instances)
# ---------------------------------------------------------------------------


def _dinic_pairs(n, pair_list, s, t):
    """Dinic on paired arcs; pair_list entries are (a, b, cap_fwd, cap_bwd)."""
    adj = [[] for _ in range(n)]
    arcs = []  # [to, cap]; arcs[i ^ 1] is the partner

    for a, b, cf, cb in pair_list:
        arcs.append([b, cf])
        adj[a].append(len(arcs) - 1)
        arcs.append([a, cb])
        adj[b].append(len(arcs) - 1)

    flow = 0
    while True:
        level = [-1] * n
        level[s] = 0
        q = deque([s])
        while q:
            v = q.popleft()
            for i in adj[v]:
                to, cap = arcs[i]
                if cap > 0 and level[to] < 0:
                    level[to] = level[v] + 1
                    q.append(to)
        if level[t] < 0:
            break
        it = [0] * n

        def dfs(v, pushed):
            if v == t:
                return pushed
            while it[v] < len(adj[v]):
                i = adj[v][it[v]]
                to, cap = arcs[i]
                if cap > 0 and level[to] == level[v] + 1:
                    got = dfs(to, min(pushed, cap))
                    if got > 0:
                        arcs[i][1] -= got
                        arcs[i ^ 1][1] += got
                        return got
                it[v] += 1
            return 0

        while True:
            pushed = dfs(s, 1 << 62)
            if pushed == 0:
                break
            flow += pushed
    return flow, arcs


def dinic_maxflow(instance, s=None, t=None):
    """(value, integral flow per edge/arc) for a DirectedGraph or undirected Graph.

    Undirected edges are modelled as a coupled arc pair with capacity c in
    each direction, which preserves the maxflow value; the reported per-edge
    flow is the signed net flow from tail to head.
    """
    if isinstance(instance, DirectedGraph):
        dg = instance
        _check_size(dg.n)
        s = dg.s if s is None else s
        t = dg.t if t is None else t
        pairs = [(a, b, c, 0) for a, b, c in dg.arcs if a != b]
        keep = [k for k, (a, b, _) in enumerate(dg.arcs) if a != b]
        value, arcs = _dinic_pairs(dg.n, pairs, s, t)
        flows = [0] * len(dg.arcs)
        for j, k in enumerate(keep):
            flows[k] = dg.arcs[k][2] - arcs[2 * j][1]
        return value, flows
    graph: Graph = instance
    _check_size(graph.n)
    s = graph.s if s is None else s
    t = graph.t if t is None else t
    pairs = [(a, b, c, c) for a, b, c in graph.edge_list()]
    value, arcs = _dinic_pairs(graph.n, pairs, s, t)
    caps = graph.capacities
    net = [int(caps[e]) - arcs[2 * e][1] for e in range(graph.m)]
    return value, net


# ---------------------------------------------------------------------------
# absorbing-walk quantities
# ---------------------------------------------------------------------------


def hitting_probabilities(graph: Graph, r, C) -> np.ndarray:
    """Matrix P with P[u, v] = p^C_v(u), rows (start vertices) summing to 1.

    Computed by the absorbing-chain solve -L_CF L_FF^{-1} columns; rows for
    u in C are indicators.
    """
    _check_size(graph.n)
    C = sorted(set(int(c) for c in C))
    F = [v for v in range(graph.n) if v not in set(C)]
    L = dense_laplacian(graph, r)
    P = np.zeros((graph.n, len(C)))
    for j, c in enumerate(C):
        P[c, j] = 1.0
    if F:
        LFF = L[np.ix_(F, F)]
        LFC = L[np.ix_(F, C)]
        X = np.linalg.solve(LFF, -LFC)  # F x C
        for i, u in enumerate(F):
            P[u] = X[i]
    return P


def exact_projection(graph: Graph, r, C, d) -> np.ndarray:
    """pi^C(d) = d_C - L_CF L_FF^{-1} d_F, returned on the sorted C ordering."""
    _check_size(graph.n)
    C = sorted(set(int(c) for c in C))
    F = [v for v in range(graph.n) if v not in set(C)]
    d = np.asarray(d, dtype=float)
    out = d[C].copy()
    if F:
        L = dense_laplacian(graph, r)
        x = np.linalg.solve(L[np.ix_(F, F)], d[F])
        out -= L[np.ix_(C, F)] @ x
    return out


def exact_schur(graph: Graph, r, C) -> np.ndarray:
    """SC(L, C) = L_CC - L_CF L_FF^{-1} L_FC on the sorted C ordering."""
    _check_size(graph.n)
    C = sorted(set(int(c) for c in C))
    F = [v for v in range(graph.n) if v not in set(C)]
    L = dense_laplacian(graph, r)
    S = L[np.ix_(C, C)].copy()
    if F:
        X = np.linalg.solve(L[np.ix_(F, F)], L[np.ix_(F, C)])
        S -= L[np.ix_(C, F)] @ X
    return S


# ---------------------------------------------------------------------------
# exact central path points (dense KKT Newton, independent of the IPM module)
# ---------------------------------------------------------------------------


def barrier_value(u, f):
    up = u - f
    um = u + f
    if (up <= 0).any() or (um <= 0).any():
        return np.inf
    return float(-(np.log(up).sum() + np.log(um).sum()))


def exact_central_point(graph: Graph, u, F_star, mu, tol=1e-12):
    """Central path flow f(mu): argmin V(f) s.t. B^T f = (F_star - mu) chi_st.

    Continuation in mu with damped Newton steps on the full dense KKT system.
    Ground truth for the interior point property tests.
    """
    _check_size(graph.n)
    u = np.asarray(u, dtype=float)
    m, n = graph.m, graph.n
    target_of = lambda nu: (F_star - nu) * chi(n, graph.s, graph.t)
    f = np.zeros(m)
    nu = float(F_star)
    step = 1.0 - 1.0 / (2.0 * np.sqrt(m) + 4.0)
    while True:
        nu_next = max(mu, nu * step)
        f = _newton_center(graph, u, f, target_of(nu_next), tol)
        nu = nu_next
        if nu <= mu:
            return f


def _newton_center(graph: Graph, u, f0, target, tol):
    m, n = graph.m, graph.n
    f = f0.copy()
    B_rows = (graph.tails, graph.heads)
    for _ in range(400):
        up = u - f
        um = u + f
        grad = 1.0 / up - 1.0 / um
        hess = 1.0 / up**2 + 1.0 / um**2
        resid = np.zeros(n)
        np.add.at(resid, graph.heads, f)
        np.subtract.at(resid, graph.tails, f)
        resid -= target
        # KKT: [H  B; B^T 0] [df; -phi] = [-grad; -resid]
        K = np.zeros((m + n, m + n))
        K[:m, :m] = np.diag(hess)
        for e in range(m):
            K[e, m + graph.heads[e]] = 1.0
            K[e, m + graph.tails[e]] = -1.0
            K[m + graph.heads[e], e] = 1.0
            K[m + graph.tails[e], e] = -1.0
        rhs = np.concatenate([-grad, -resid])
        sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
        df = sol[:m]
        # damped step keeping strict interiority
        alpha = 1.0
        while alpha > 1e-14:
            fn = f + alpha * df
            if ((u - fn) > 0).all() and ((u + fn) > 0).all():
                break
            alpha *= 0.5
        f = f + alpha * df
        nd = np.sqrt(float((df * hess * df).sum()))
        if alpha == 1.0 and nd < tol and np.abs(resid).max() < max(tol, 1e-12) * max(1.0, np.abs(target).max()):
            break
    return f


def central_dual(graph: Graph, u, f) -> np.ndarray:
    """Least-squares dual potentials phi for a (near-)central flow."""
    up = u - f
    um = u + f
    g = 1.0 / up - 1.0 / um
    r = 1.0 / up**2 + 1.0 / um**2
    # minimize || B phi - g ||_{R^{-1}}: normal equations L phi = B^T R^{-1} g
    L = dense_laplacian(graph, r)
    rhs = np.zeros(graph.n)
    np.add.at(rhs, graph.heads, g / r)
    np.subtract.at(rhs, graph.tails, g / r)
    phi = np.linalg.pinv(L, hermitian=True) @ rhs
    return phi - phi.mean()


def brute_force_maxflow_value(dg: DirectedGraph) -> int:
    """Enumerate all integral arc flows (tiny instances only)."""
    import itertools

    arcs = dg.arcs
    total = 1
    for _, _, c in arcs:
        total *= c + 1
    if total > 2_000_000:
        raise GraphError("instance too large for brute force")
    best = 0
    ranges = [range(c + 1) for _, _, c in arcs]
    for combo in itertools.product(*ranges):
        div = [0] * dg.n
        for (a, b, _), fv in zip(arcs, combo):
            div[b] += fv
            div[a] -= fv
        ok = all(div[v] == 0 for v in range(dg.n) if v not in (dg.s, dg.t))
        if ok and div[dg.t] > best:
            best = div[dg.t]
    return best
