"""Node centralities on a directed communication graph.

Betweenness and closeness use hop distances (Brandes' algorithm, compiled
with numba); eigenvector and authority scores use the email counts as
weights and are found by power iteration.
"""

from __future__ import annotations

from typing import NamedTuple

import numba
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ..errors import NotConverged
from ..model import CommGraph


class Centrality(NamedTuple):
    betweenness: float
    closeness: float
    eigenvector: float
    authority: float


@numba.njit(cache=True, nogil=True)
def _brandes(indptr, indices, n):
    bc = np.zeros(n)
    dist_in = np.zeros(n)      # sum of distances from all sources reaching v
    reach_in = np.zeros(n)     # number of sources reaching v (excluding v)
    sigma = np.zeros(n)
    dist = np.full(n, -1, dtype=np.int64)
    delta = np.zeros(n)
    coef = np.zeros(n)
    order = np.empty(n, dtype=np.int64)
    for s in range(n):
        for i in range(n):
            sigma[i] = 0.0
            dist[i] = -1
            delta[i] = 0.0
        sigma[s] = 1.0
        dist[s] = 0
        head = 0
        tail = 0
        order[tail] = s
        tail += 1
        while head < tail:
            v = order[head]
            head += 1
            dv = dist[v]
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dv + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == dv + 1:
                    sigma[w] += sigma[v]
        for j in range(1, tail):
            v = order[j]
            dist_in[v] += dist[v]
            reach_in[v] += 1.0
        # dependencies in reverse BFS order, walking out-edges to successors;
        # coef[w] = (1 + delta[w]) / sigma[w] is final once w has been visited
        for j in range(tail - 1, -1, -1):
            v = order[j]
            dv = dist[v] + 1
            acc = 0.0
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] == dv:
                    acc += coef[w]
            delta[v] = sigma[v] * acc
            coef[v] = (1.0 + delta[v]) / sigma[v]
            if v != s:
                bc[v] += delta[v]
    return bc, dist_in, reach_in


def _csr_binary(comm: CommGraph) -> sp.csr_matrix:
    n = comm.n_nodes
    m = sp.csr_matrix((np.ones(comm.n_edges), (comm.src, comm.dst)), shape=(n, n))
    m.sort_indices()
    return m


def betweenness_closeness(comm: CommGraph) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalised betweenness and Wasserman-Faust closeness (incoming)."""
    n = comm.n_nodes
    if n == 0:
        return np.zeros(0), np.zeros(0)
    a = _csr_binary(comm)
    bc, dist_in, reach_in = _brandes(a.indptr.astype(np.int64), a.indices.astype(np.int64), n)
    close = np.zeros(n)
    ok = dist_in > 0
    if n > 1:
        close[ok] = (reach_in[ok] / dist_in[ok]) * (reach_in[ok] / (n - 1))
    return bc, close


def _power(op, n, tol, max_iter, what):
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        y = op(x)
        s = y.sum()
        if s == 0:
            return np.zeros(n)
        y /= s
        if np.abs(y - x).sum() <= tol * np.abs(y).sum():
            return y
        x = y
    raise NotConverged(f"{what} power iteration did not converge in {max_iter} iterations")


def eigenvector_scores(comm: CommGraph, tol: float = 1e-10, max_iter: int = 10_000) -> np.ndarray:
    """Left Perron vector of the weighted adjacency (in-edge centrality).

    Iterates ``x <- (A.T + I) x``; the shift removes periodicity without
    changing the eigenvector. Returned with unit Euclidean norm. A graph
    without directed cycles has spectral radius 0 and no Perron vector; it
    scores all zeros.
    """
    n = comm.n_nodes
    if n == 0:
        return np.zeros(0)
    n_scc, _ = connected_components(comm.matrix, directed=True, connection="strong")
    if n_scc == n:
        return np.zeros(n)
    at = comm.matrix.T.tocsr().astype(np.float64)
    x = _power(lambda v: at @ v + v, n, tol, max_iter, "eigenvector")
    nrm = np.linalg.norm(x)
    return x / nrm if nrm else x


def authority_scores(comm: CommGraph, tol: float = 1e-10, max_iter: int = 10_000) -> np.ndarray:
    """HITS authority: principal eigenvector of ``A.T A``, summing to one."""
    n = comm.n_nodes
    if n == 0:
        return np.zeros(0)
    a = comm.matrix.astype(np.float64)
    at = a.T.tocsr()
    return _power(lambda v: at @ (a @ v), n, tol, max_iter, "authority")


def centralities(comm: CommGraph, tol: float = 1e-10, max_iter: int = 10_000) -> dict[str, Centrality]:
    bc, close = betweenness_closeness(comm)
    eig = eigenvector_scores(comm, tol, max_iter)
    auth = authority_scores(comm, tol, max_iter)
    return {
        u: Centrality(float(bc[i]), float(close[i]), float(eig[i]), float(auth[i]))
        for i, u in enumerate(comm.ids)
    }
