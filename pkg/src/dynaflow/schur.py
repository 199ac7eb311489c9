"""Exact and walk-sampled Schur complements, and the DynamicSC structure.

The dynamic structure keeps, per edge, rho sampled walk pairs (one walk per
endpoint, joined through the edge) with per-prefix resistive lengths.  Adding
terminals shortcuts every stored walk to its earliest visit of the new
terminal set; the sampled Schur complement is assembled on demand from the
current frontiers.  All mutations are logged so the last operation can be
rolled back exactly.

Two properties make updates sound: an updated edge must have both endpoints
in C, a shortcut prefix never traverses an edge whose endpoints are both in
C, and therefore stored resistive lengths never go stale.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, GraphError, chi
from .oracles import exact_schur  # noqa: F401  (oracle-grade, re-exported here)
from .rng import RngStream, state_seeded_generator
from .walks import (
    STATUS_HIT, WalkBudgetError, WalkEngine, congestion_reduction_subset,
    default_distinct_budget,
)

DEFAULT_RHO_CAP = 20_000
SPARSIFY_CONTRIBUTION_CAP = 4_000_000


class OrderingError(RuntimeError):
    """Permanent mutation attempted while temporary ones are outstanding."""


def rho_for(eps: float, n: int, cap: int = DEFAULT_RHO_CAP) -> int:
    rho = int(np.ceil(8.0 * np.log(max(n, 2)) / (eps * eps)))
    if rho > cap:
        warnings.warn(f"walk repetition count capped at {cap} (nominal {rho}); "
                      "spectral accuracy becomes a measured quantity", RuntimeWarning)
        return cap
    return max(1, rho)


@dataclass
class ScMatrix:
    """Sampled Schur complement: dense Laplacian on the listed vertices."""

    vertices: np.ndarray
    L: np.ndarray

    def index_of(self, v) -> int:
        i = int(np.searchsorted(self.vertices, v))
        if i >= len(self.vertices) or self.vertices[i] != v:
            raise KeyError(f"vertex {v} not a terminal")
        return i

    def solve(self, demand_on_C: np.ndarray) -> np.ndarray:
        """Mean-zero potentials x with L x = demand (demand sums to zero)."""
        k = len(self.vertices)
        x = np.zeros(k)
        x[1:] = np.linalg.solve(self.L[1:, 1:], np.asarray(demand_on_C, float)[1:])
        return x - x.mean()

    def solve_st(self, s, t) -> np.ndarray:
        d = np.zeros(len(self.vertices))
        d[self.index_of(s)] -= 1.0
        d[self.index_of(t)] += 1.0
        return self.solve(d)

    def effective_resistance(self, a, b) -> float:
        x = self.solve_st(a, b)
        return float(x[self.index_of(b)] - x[self.index_of(a)])


def assemble_laplacian(vertices, t1, t2, resistance) -> ScMatrix:
    vertices = np.asarray(sorted(vertices), dtype=np.int64)
    idx = {int(v): i for i, v in enumerate(vertices)}
    k = len(vertices)
    a = np.array([idx[int(v)] for v in t1], dtype=np.int64)
    b = np.array([idx[int(v)] for v in t2], dtype=np.int64)
    w = 1.0 / np.asarray(resistance, dtype=float)
    keep = a != b
    a, b, w = a[keep], b[keep], w[keep]
    L = np.zeros((k, k))
    np.add.at(L, (a, a), w)
    np.add.at(L, (b, b), w)
    np.subtract.at(L, (a, b), w)
    np.subtract.at(L, (b, a), w)
    return ScMatrix(vertices, L)


def spectral_ratio_bounds(A: np.ndarray, B: np.ndarray):
    """(min, max) generalized eigenvalues of (A, B) on the complement of ones."""
    import scipy.linalg

    n = A.shape[0]
    ones = np.ones((n, 1)) / np.sqrt(n)
    U, _, _ = np.linalg.svd(np.eye(n) - ones @ ones.T)
    V = U[:, : n - 1]
    ev = scipy.linalg.eigh(V.T @ A @ V, V.T @ B @ V, eigvals_only=True)
    return float(ev.min()), float(ev.max())


@dataclass
class ApproxSC:
    """Walk-sampled multigraph approximation of SC(G, C)."""

    vertices: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    resistance: np.ndarray

    def laplacian(self) -> ScMatrix:
        return assemble_laplacian(self.vertices, self.t1, self.t2, self.resistance)

    def effective_resistance(self, a, b) -> float:
        return self.laplacian().effective_resistance(a, b)


def approx_schur_via_walks(graph: Graph, r, C, eps, rng: RngStream,
                           rho_cap=DEFAULT_RHO_CAP) -> ApproxSC:
    """One-shot Lemma-style sampled Schur complement onto C.

    Edges inside C are copied verbatim; every other edge contributes rho
    sampled walk pairs, each an edge between the two walk exits with
    resistance rho * (combined resistive length).
    """
    if not (0 < eps < 1):
        raise GraphError("eps must be in (0,1)")
    r = np.asarray(r, dtype=float)
    C = np.asarray(sorted(set(int(c) for c in C)), dtype=np.int64)
    Cmask = np.zeros(graph.n, dtype=bool)
    Cmask[C] = True
    rho = rho_for(eps, graph.n, rho_cap)

    inside = Cmask[graph.tails] & Cmask[graph.heads]
    t1 = [graph.tails[inside]]
    t2 = [graph.heads[inside]]
    res = [r[inside]]

    out = np.flatnonzero(~inside)
    if len(out):
        engine = WalkEngine(graph, r)
        starts = np.concatenate([np.repeat(graph.tails[out], rho),
                                 np.repeat(graph.heads[out], rho)])
        bulk = engine.run(starts, rng, stop_set=C, distinct_budget=graph.n)
        if not (bulk.status == STATUS_HIT).all():
            raise WalkBudgetError("sampled walk failed to reach C")
        exits = bulk.vertices[bulk.offsets[1:] - 1]
        lens = bulk.lengths[bulk.offsets[1:] - 1]
        half = len(out) * rho
        t1.append(exits[:half])
        t2.append(exits[half:])
        res.append(rho * (lens[:half] + np.repeat(r[out], rho) + lens[half:]))
    return ApproxSC(C, np.concatenate(t1), np.concatenate(t2), np.concatenate(res))


# ---------------------------------------------------------------------------
# DynamicSC
# ---------------------------------------------------------------------------


@dataclass
class _LogEntry:
    kind: str                    # "perm_add" | "temp_add" | "update"
    added: np.ndarray | None = None
    frontier_walks: np.ndarray | None = None
    frontier_old: np.ndarray | None = None
    edges: np.ndarray | None = None
    old_r: np.ndarray | None = None


class DynamicSC:
    """Dynamic Schur complement with terminal additions, updates, rollback.

    Construct via :func:`dsc_initialize`.  Same seed plus same operation
    sequence reproduces bit-identical SC() outputs: initialization randomness
    comes from the stream, and query-time sparsification (when it triggers)
    is keyed by a hash of the logical state rather than by draw order.
    """

    def __init__(self, graph, r_init, C_init, eps, beta, rng,
                 rho_cap=DEFAULT_RHO_CAP, sparsify_cap=SPARSIFY_CONTRIBUTION_CAP):
        if not (0 < eps < 1):
            raise GraphError("eps must be in (0,1)")
        if not (0 < beta <= 1):
            raise GraphError("beta must be in (0,1]")
        self.graph = graph
        self.n, self.m = graph.n, graph.m
        self.r = np.asarray(r_init, dtype=float).copy()
        self.eps = float(eps)
        self.beta = float(beta)
        self.rng = rng
        self.sparsify_cap = sparsify_cap
        self.rho = rho_for(eps, graph.n, rho_cap)
        self._log: list[_LogEntry] = []
        self._temp_outstanding = 0
        self._version = 0

        gen = rng.child(0).generator()
        C_congest = congestion_reduction_subset(graph, beta, rng.child(1), r=self.r)
        k = min(self.n, int(np.ceil(beta * self.m)))
        C_sample = gen.choice(self.n, size=k, replace=False)
        self.C_mask = np.zeros(self.n, dtype=bool)
        self.C_mask[C_congest] = True
        self.C_mask[C_sample] = True
        self.C_safe = np.flatnonzero(self.C_mask).copy()
        self.tag = {int(v): "safe" for v in self.C_safe}
        for v in C_init:
            if not self.C_mask[v]:
                self.tag[int(v)] = "init"
            self.C_mask[v] = True
        self.C_init = np.asarray(sorted(set(int(v) for v in C_init)), dtype=np.int64)

        # sample rho walk pairs per edge not inside C
        inside = self.C_mask[graph.tails] & self.C_mask[graph.heads]
        self.verbatim = inside.copy()
        self.sampled_edges = np.flatnonzero(~inside)
        ne = len(self.sampled_edges)
        if ne:
            budget = min(self.n, default_distinct_budget(beta, self.m))
            engine = WalkEngine(graph, self.r)
            starts = np.empty(2 * ne * self.rho, dtype=np.int64)
            starts[: ne * self.rho] = np.repeat(graph.tails[self.sampled_edges], self.rho)
            starts[ne * self.rho:] = np.repeat(graph.heads[self.sampled_edges], self.rho)
            bulk = engine.run(starts, rng.child(2), stop_set=np.flatnonzero(self.C_mask),
                              distinct_budget=budget)
            if not (bulk.status == STATUS_HIT).all():
                raise WalkBudgetError("DynamicSC init walk missed the terminal set")
            self.wt_off = bulk.offsets
            self.wt_verts = bulk.vertices
            self.wt_lens = bulk.lengths
            # frontier: index within the walk slice of the current C hit
            self.frontier = (self.wt_off[1:] - self.wt_off[:-1] - 1).astype(np.int64)
            # reverse index: vertex -> (walk id, position in slice)
            total = len(self.wt_verts)
            walk_of_pos = np.repeat(np.arange(len(starts)), np.diff(self.wt_off))
            pos_in_walk = np.arange(total) - self.wt_off[walk_of_pos]
            order = np.argsort(self.wt_verts, kind="stable")
            self.rev_walk = walk_of_pos[order]
            self.rev_pos = pos_in_walk[order]
            counts = np.bincount(self.wt_verts, minlength=self.n)
            self.rev_off = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(counts, out=self.rev_off[1:])
            # per-edge walk ids: tail side walk (e,j) = e*rho + j, head side offset
            self._half = ne * self.rho
        else:
            self.wt_off = np.zeros(1, dtype=np.int64)
            self.wt_verts = np.zeros(0, dtype=np.int64)
            self.wt_lens = np.zeros(0)
            self.frontier = np.zeros(0, dtype=np.int64)
            self.rev_walk = np.zeros(0, dtype=np.int64)
            self.rev_pos = np.zeros(0, dtype=np.int64)
            self.rev_off = np.zeros(self.n + 1, dtype=np.int64)
            self._half = 0

    # -- operations ---------------------------------------------------------

    def terminals(self) -> np.ndarray:
        return np.flatnonzero(self.C_mask)

    def permanent_add_terminals(self, dC):
        if self._temp_outstanding:
            raise OrderingError("temporary terminal additions are outstanding")
        self._add(dC, "perm_add")

    def temporary_add_terminals(self, dC):
        self._add(dC, "temp_add")
        self._temp_outstanding += 1

    def _add(self, dC, kind):
        new = np.asarray(sorted({int(v) for v in dC if not self.C_mask[v]}), dtype=np.int64)
        walks_changed = []
        old_front = []
        for v in new:
            self.C_mask[v] = True
            self.tag[int(v)] = "permanent" if kind == "perm_add" else "temporary"
            lo, hi = self.rev_off[v], self.rev_off[v + 1]
            w = self.rev_walk[lo:hi]
            p = self.rev_pos[lo:hi]
            hit = p < self.frontier[w]
            if hit.any():
                walks_changed.append(w[hit])
                old_front.append(self.frontier[w[hit]].copy())
                self.frontier[w[hit]] = p[hit]
        entry = _LogEntry(kind, added=new,
                          frontier_walks=np.concatenate(walks_changed) if walks_changed else np.zeros(0, np.int64),
                          frontier_old=np.concatenate(old_front) if old_front else np.zeros(0, np.int64))
        self._log.append(entry)
        self._version += 1

    def update(self, edges, r_new):
        edges = np.atleast_1d(np.asarray(edges, dtype=np.int64))
        r_new = np.broadcast_to(np.asarray(r_new, dtype=float), edges.shape)
        ok = self.C_mask[self.graph.tails[edges]] & self.C_mask[self.graph.heads[edges]]
        if not ok.all():
            raise GraphError("update requires both endpoints to be terminals")
        if (r_new <= 0).any():
            raise GraphError("resistances must be positive")
        self._log.append(_LogEntry("update", edges=edges.copy(), old_r=self.r[edges].copy()))
        self.r[edges] = r_new
        self._version += 1

    def rollback(self):
        if not self._log:
            raise OrderingError("nothing to roll back")
        e = self._log.pop()
        if e.kind == "update":
            self.r[e.edges] = e.old_r
        else:
            # restore in reverse: frontiers recorded before mutation
            self.frontier[e.frontier_walks] = e.frontier_old
            self.C_mask[e.added] = False
            for v in e.added:
                self.tag.pop(int(v), None)
            if e.kind == "temp_add":
                self._temp_outstanding -= 1
        self._version += 1

    def outstanding_temporaries(self) -> int:
        return self._temp_outstanding

    # -- queries ------------------------------------------------------------

    def contributions(self):
        """Current multigraph (t1, t2, resistance) realizing the sampled SC."""
        C = np.flatnonzero(self.C_mask)
        t1 = [self.graph.tails[self.verbatim]]
        t2 = [self.graph.heads[self.verbatim]]
        res = [self.r[self.verbatim]]
        if len(self.sampled_edges):
            w_tail = np.arange(self._half)
            w_head = np.arange(self._half, 2 * self._half)
            ft, fh = self.frontier[w_tail], self.frontier[w_head]
            vt = self.wt_verts[self.wt_off[w_tail] + ft]
            vh = self.wt_verts[self.wt_off[w_head] + fh]
            lt = self.wt_lens[self.wt_off[w_tail] + ft]
            lh = self.wt_lens[self.wt_off[w_head] + fh]
            r_edge = np.repeat(self.r[self.sampled_edges], self.rho)
            t1.append(vt)
            t2.append(vh)
            res.append(self.rho * (lt + r_edge + lh))
        return C, np.concatenate(t1), np.concatenate(t2), np.concatenate(res)

    def sc(self) -> ScMatrix:
        """Sampled (1+eps)-approximate Schur complement at the current state."""
        C, t1, t2, res = self.contributions()
        if len(t1) > self.sparsify_cap:
            t1, t2, res = self._sparsify(C, t1, t2, res)
        return assemble_laplacian(C, t1, t2, res)

    def _sparsify(self, C, t1, t2, res):
        """Independent sampling within log-resistance buckets, re-done per query."""
        gen = state_seeded_generator(self.rng.seed, self.rng.path, C, self.r,
                                     self.frontier, b"sparsify")
        buckets = np.floor(np.log2(res)).astype(np.int64)
        keep_idx = []
        scale = []
        per_bucket = max(1, self.sparsify_cap // max(1, len(np.unique(buckets))))
        for b in np.unique(buckets):
            idx = np.flatnonzero(buckets == b)
            if len(idx) <= per_bucket:
                keep_idx.append(idx)
                scale.append(np.ones(len(idx)))
            else:
                pick = gen.choice(len(idx), size=per_bucket, replace=False)
                keep_idx.append(idx[pick])
                scale.append(np.full(per_bucket, len(idx) / per_bucket))
        keep = np.concatenate(keep_idx)
        sc = np.concatenate(scale)
        return t1[keep], t2[keep], res[keep] * sc

    def state_fingerprint(self):
        """Structural snapshot for rollback-exactness checks."""
        return (self.C_mask.copy(), self.r.copy(), self.frontier.copy())


def dsc_initialize(graph, r_init, C_init, eps, beta, rng,
                   rho_cap=DEFAULT_RHO_CAP) -> tuple[DynamicSC, np.ndarray]:
    """Build a DynamicSC handle; returns (handle, safe terminal set)."""
    h = DynamicSC(graph, r_init, C_init, eps, beta, rng, rho_cap=rho_cap)
    return h, h.C_safe.copy()
