"""Electric potentials, flows, and energies for given resistances and demands.

The solver contract: returned potentials phi satisfy
``|| phi - phi* ||_L <= tol * || phi* ||_L`` for the true potentials phi*.
Below `dense_threshold` vertices the solve is a direct factorization (and all
oracles use that path); above it a Jacobi-preconditioned CG runs with an
iteration cap and raises on nonconvergence, carrying the report.

Tolerances default to 1e-10 so downstream error analyses can treat solves as
exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph, GraphError, chi

DEFAULT_TOL = 1e-10
DENSE_THRESHOLD = 400
ITER_CEILING = 10**6


class SolveError(RuntimeError):
    def __init__(self, msg, report):
        super().__init__(msg)
        self.report = report


@dataclass
class ResistanceVector:
    """Strictly positive, finite per-edge resistances with safety clamps."""

    values: np.ndarray
    lower: float = 1e-12
    upper: float = 1e12

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.isfinite(v).all():
            raise GraphError("resistances must be finite")
        if (v <= 0).any():
            raise GraphError("resistances must be strictly positive")
        self.values = np.clip(v, self.lower, self.upper)


@dataclass
class SolveReport:
    iterations: int
    residual: float
    tol: float
    method: str


def _as_r(r) -> np.ndarray:
    if isinstance(r, ResistanceVector):
        return r.values
    return ResistanceVector(np.asarray(r, dtype=float)).values


def laplacian(graph: Graph, r) -> sp.csr_matrix:
    r = _as_r(r)
    w = 1.0 / r
    n = graph.n
    i = np.concatenate([graph.tails, graph.heads, graph.tails, graph.heads])
    j = np.concatenate([graph.heads, graph.tails, graph.tails, graph.heads])
    v = np.concatenate([-w, -w, w, w])
    return sp.coo_matrix((v, (i, j)), shape=(n, n)).tocsr()


def solve_potentials(graph: Graph, r, demand, tol=DEFAULT_TOL):
    """Mean-zero potentials phi with L phi = demand.

    Dense (grounded) factorization below DENSE_THRESHOLD vertices, Jacobi-PCG
    above; raises SolveError with the report on nonconvergence.
    """
    r = _as_r(r)
    d = np.asarray(demand, dtype=float)
    if d.shape != (graph.n,):
        raise GraphError("demand length mismatch")
    if abs(d.sum()) > 1e-8 * max(1.0, np.abs(d).sum()):
        raise GraphError("demand does not sum to zero")

    if graph.n <= DENSE_THRESHOLD:
        L = laplacian(graph, r).toarray()
        # ground vertex 0
        phi = np.zeros(graph.n)
        phi[1:] = np.linalg.solve(L[1:, 1:], d[1:])
        phi -= phi.mean()
        resid = float(np.linalg.norm(L @ phi - d))
        return phi, SolveReport(iterations=1, residual=resid, tol=tol, method="dense")

    L = laplacian(graph, r)
    diag = L.diagonal()
    inv_diag = 1.0 / np.maximum(diag, 1e-300)
    cond_est = float(diag.max() / max(diag.min(), 1e-300)) * graph.n
    cap = int(min(ITER_CEILING, 50 * np.sqrt(cond_est) + 100))

    dn = np.linalg.norm(d)
    if dn == 0:
        return np.zeros(graph.n), SolveReport(0, 0.0, tol, "pcg")
    x = np.zeros(graph.n)
    res = d.copy()
    z = inv_diag * res
    p = z.copy()
    rz = float(res @ z)
    it = 0
    while it < cap:
        Lp = L @ p
        denom = float(p @ Lp)
        if denom <= 0:
            break
        alpha = rz / denom
        x += alpha * p
        res -= alpha * Lp
        if np.linalg.norm(res) <= tol * dn:
            break
        z = inv_diag * res
        rz_new = float(res @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
    resid = float(np.linalg.norm(L @ x - d))
    report = SolveReport(iterations=it, residual=resid, tol=tol, method="pcg")
    if resid > tol * dn * 10:
        raise SolveError("CG did not converge", report)
    x -= x.mean()
    return x, report


def electric_flow(graph: Graph, r, demand, tol=DEFAULT_TOL):
    """Electric flow f = R^{-1} B phi routing `demand`."""
    r = _as_r(r)
    phi, report = solve_potentials(graph, r, demand, tol)
    f = (phi[graph.heads] - phi[graph.tails]) / r
    return f, phi, report


def energy(r, flow) -> float:
    """sum_e r_e f_e^2."""
    r = _as_r(r)
    f = np.asarray(flow, dtype=float)
    if f.shape != r.shape:
        raise GraphError("shape mismatch")
    return float((r * f * f).sum())


def effective_resistance(graph: Graph, r, a, b, tol=DEFAULT_TOL) -> float:
    """chi_ab^T L^dagger chi_ab."""
    if a == b:
        raise GraphError("effective resistance needs distinct vertices")
    phi, _ = solve_potentials(graph, r, chi(graph.n, a, b), tol)
    return float(phi[b] - phi[a])


def st_energy(graph: Graph, r, tol=DEFAULT_TOL) -> float:
    """Energy of the unit s-t electric flow (== effective s-t resistance)."""
    return effective_resistance(graph, r, graph.s, graph.t, tol)
