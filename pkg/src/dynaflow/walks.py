"""Weighted random-walk sampling and the congestion-reduction terminal subset.

Walk steps choose an incident edge with probability proportional to 1/r_e.
Only first visits are stored, together with the exact cumulative resistive
length of the walk at the time of each first visit (the exp(eps) slack the
interface allows is honored trivially by exactness).

A bulk engine advances many walks in lockstep with numpy; the single-walk
operations wrap it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, GraphError
from .rng import RngStream

STATUS_HIT = 0      # stopped at a stop-set vertex
STATUS_BUDGET = 1   # reached the distinct-vertex budget
STATUS_FAILED = 2   # exceeded the step cap


class WalkBudgetError(RuntimeError):
    """A walk exhausted its budget before reaching the stop set."""


@dataclass
class WalkRecord:
    """Ordered first-visit sequence of one walk with per-prefix resistive lengths."""

    source: int
    first_visits: np.ndarray
    resistive_length_at: np.ndarray
    hit_terminal: int | None
    weight: float = 1.0

    def length_to(self, vertex) -> float:
        i = int(np.nonzero(self.first_visits == vertex)[0][0])
        return float(self.resistive_length_at[i])


@dataclass
class BulkWalks:
    """Ragged storage for many walks: walk i occupies [offsets[i], offsets[i+1])."""

    offsets: np.ndarray
    vertices: np.ndarray
    lengths: np.ndarray
    status: np.ndarray

    @property
    def count(self) -> int:
        return len(self.offsets) - 1

    def slice(self, i):
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return self.vertices[lo:hi], self.lengths[lo:hi]

    def record(self, i, weight=1.0) -> WalkRecord:
        verts, lens = self.slice(i)
        hit = int(verts[-1]) if self.status[i] == STATUS_HIT else None
        return WalkRecord(int(verts[0]), verts.copy(), lens.copy(), hit, weight)


def default_distinct_budget(beta: float, m: int) -> int:
    return int(np.ceil(40.0 * np.log(max(m, 2)) / beta))


class WalkEngine:
    """Vectorized stepper for a fixed (graph, resistances) pair."""

    def __init__(self, graph: Graph, r):
        self.graph = graph
        self.n = graph.n
        self.r = np.asarray(r, dtype=float)
        if (self.r <= 0).any():
            raise GraphError("resistances must be positive")
        self.off = graph.inc_offsets
        self.inc_edges = graph.inc_edges
        self.inc_other = graph.inc_other
        w = 1.0 / self.r[self.inc_edges]
        self.csum = np.concatenate([[0.0], np.cumsum(w)])

    def run(self, starts, rng: RngStream | np.random.Generator, stop_set=None,
            distinct_budget=None, step_cap=None) -> BulkWalks:
        """Advance walks from `starts` until stop-set hit or budget reached."""
        starts = np.asarray(starts, dtype=np.int64)
        gen = rng.generator() if isinstance(rng, RngStream) else rng
        budget = self.n if distinct_budget is None else int(distinct_budget)
        budget = max(1, min(budget, self.n))
        if step_cap is None:
            step_cap = max(20_000, 200 * budget * budget)
        stopm = None
        if stop_set is not None:
            stopm = np.zeros(self.n, dtype=bool)
            stopm[np.asarray(list(stop_set), dtype=np.int64)] = True

        chunk = max(1, int(4e7 // max(self.n, 1)))
        pieces = [self._run_chunk(starts[i:i + chunk], stopm, budget, gen, step_cap)
                  for i in range(0, len(starts), chunk)]
        if len(pieces) == 1:
            return pieces[0]
        offsets = [np.array([0], dtype=np.int64)]
        base = 0
        verts, lens, stats = [], [], []
        for p in pieces:
            offsets.append(p.offsets[1:] + base)
            base += p.offsets[-1]
            verts.append(p.vertices)
            lens.append(p.lengths)
            stats.append(p.status)
        return BulkWalks(np.concatenate(offsets), np.concatenate(verts),
                         np.concatenate(lens), np.concatenate(stats))

    def _run_chunk(self, starts, stopm, budget, gen, step_cap) -> BulkWalks:
        W = len(starts)
        if W == 0:
            return BulkWalks(np.zeros(1, np.int64), np.zeros(0, np.int64),
                             np.zeros(0), np.zeros(0, np.int8))
        pos = starts.copy()
        cum = np.zeros(W)
        visited = np.zeros((W, self.n), dtype=bool)
        visited[np.arange(W), pos] = True
        count = np.ones(W, dtype=np.int64)
        rec_w = [np.arange(W, dtype=np.int64)]
        rec_v = [pos.copy()]
        rec_c = [np.zeros(W)]
        status = np.full(W, -1, dtype=np.int8)
        active = np.ones(W, dtype=bool)

        if stopm is not None:
            hit0 = stopm[pos]
            status[hit0] = STATUS_HIT
            active &= ~hit0
        full0 = active & (count >= budget)
        status[full0] = STATUS_BUDGET
        active &= ~full0

        steps = 0
        while active.any():
            steps += 1
            if steps > step_cap:
                status[active] = STATUS_FAILED
                break
            idx = np.flatnonzero(active)
            p = pos[idx]
            lo = self.off[p]
            hi = self.off[p + 1]
            u = gen.random(len(idx))
            target = self.csum[lo] + u * (self.csum[hi] - self.csum[lo])
            j = np.searchsorted(self.csum, target, side="right") - 1
            j = np.clip(j, lo, hi - 1)
            cum[idx] += self.r[self.inc_edges[j]]
            nxt = self.inc_other[j]
            pos[idx] = nxt
            first = ~visited[idx, nxt]
            if first.any():
                fi = idx[first]
                fv = nxt[first]
                visited[fi, fv] = True
                count[fi] += 1
                rec_w.append(fi)
                rec_v.append(fv.astype(np.int64))
                rec_c.append(cum[fi].copy())
                if stopm is not None:
                    hits = stopm[fv]
                    status[fi[hits]] = STATUS_HIT
                    active[fi[hits]] = False
                fullb = (count[fi] >= budget) & active[fi]
                status[fi[fullb]] = STATUS_BUDGET
                active[fi[fullb]] = False

        w_all = np.concatenate(rec_w)
        v_all = np.concatenate(rec_v)
        c_all = np.concatenate(rec_c)
        order = np.argsort(w_all, kind="stable")
        counts = np.bincount(w_all, minlength=W)
        offsets = np.zeros(W + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        return BulkWalks(offsets, v_all[order], c_all[order], status)


def sample_walk(graph: Graph, r, start, C, rng: RngStream,
                distinct_budget=None) -> WalkRecord:
    """One walk from `start` to the terminal set C (first visits only).

    Raises WalkBudgetError if the distinct-vertex budget runs out first; the
    caller treats that as a with-high-probability-impossible event.
    """
    if not C:
        raise GraphError("terminal set must be nonempty")
    engine = WalkEngine(graph, r)
    bulk = engine.run([start], rng, stop_set=C, distinct_budget=distinct_budget)
    if bulk.status[0] != STATUS_HIT:
        raise WalkBudgetError(f"walk from {start} missed C within budget")
    return bulk.record(0)


def sample_walk_with_lengths(graph: Graph, r, start, distinct_budget, eps,
                             rng: RngStream, stop_set=None) -> WalkRecord:
    """Walk until `distinct_budget` distinct vertices, with resistive lengths.

    Lengths are tracked exactly, which satisfies the multiplicative exp(eps)
    contract for any eps in (0,1).  An optional stop_set truncates the walk
    at its first hit (the prefix is all later consumers ever need).
    """
    if not (0 < eps < 1):
        raise GraphError("eps must be in (0,1)")
    engine = WalkEngine(graph, r)
    bulk = engine.run([start], rng, stop_set=stop_set, distinct_budget=distinct_budget)
    if bulk.status[0] == STATUS_FAILED:
        raise WalkBudgetError(f"walk from {start} exceeded the step cap")
    return bulk.record(0)


def congestion_reduction_subset(graph: Graph, beta, rng: RngStream, r=None,
                                rho_coef=10.0, h_coef=100.0, c_cong=8.0,
                                distinct_budget=None):
    """Terminal seed set: endpoints of beta*m random edges plus every vertex
    whose Monte-Carlo walk congestion estimate reaches h/2.

    Walks use the same step measure as the consumer (proportional to 1/r_e;
    unit resistances when r is omitted).  Returns a sorted numpy array of
    vertex ids of size O(beta * m).
    """
    if not (0 < beta <= 1):
        raise GraphError("beta must be in (0, 1]")
    m, n = graph.m, graph.n
    if beta * m < 1:
        raise GraphError("beta * m must be at least 1")
    gen = rng.generator()
    k = min(m, int(np.ceil(beta * m)))
    picked = gen.choice(m, size=k, replace=False)
    Cmask = np.zeros(n, dtype=bool)
    Cmask[graph.tails[picked]] = True
    Cmask[graph.heads[picked]] = True
    F = np.flatnonzero(~Cmask)
    if len(F) == 0:
        return np.flatnonzero(Cmask)

    rho = max(1, int(np.ceil(rho_coef * np.log(max(n, 2)))))
    h = h_coef * np.log(max(n, 2)) / (beta * beta)
    if distinct_budget is None:
        distinct_budget = default_distinct_budget(beta, m)

    deg = graph.degrees()
    starts = np.repeat(F, deg[F] * rho)
    engine = WalkEngine(graph, np.ones(m) if r is None else r)
    bulk = engine.run(starts, gen, stop_set=np.flatnonzero(Cmask),
                      distinct_budget=distinct_budget)
    if (bulk.status == STATUS_FAILED).any():
        raise WalkBudgetError("congestion walk exceeded the step cap")
    if (bulk.status == STATUS_BUDGET).any():
        raise WalkBudgetError("congestion walk missed C within budget")
    visits = np.bincount(bulk.vertices, minlength=n).astype(float) / rho
    add = (~Cmask) & (visits >= h / 2)
    out = np.flatnonzero(Cmask | add)
    if len(out) > max(c_cong * beta * m, len(np.flatnonzero(Cmask))):
        raise RuntimeError("congestion reduction subset exceeded its size cap")
    return out
