"""Tree reconstruction from a communication graph.

Four estimators: minimum and maximum spanning trees of the symmetrized
weights, an exact agony-minimizing ranking, and a greedy maximum-likelihood
placement under distance decay.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

import networkx as nx
import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from ..errors import Disconnected, NotATree, RootAbsent
from ..model import CommGraph, OrgTree, build_org_tree

VIRTUAL_ROOT = "__virtual_root__"


@dataclass(frozen=True)
class HierarchyEstimate:
    """Output of a reconstruction method.

    ``tree`` estimates hold undirected edges ``(a, b)`` with ``a < b``;
    ``graph`` estimates hold directed child->parent edges (possibly to
    :data:`VIRTUAL_ROOT`); ``ranking`` estimates hold integer ranks, where a
    larger rank means lower in the hierarchy, plus the binary comm edges they
    were fitted to.
    """

    kind: str
    method: str
    nodes: tuple
    edges: tuple = ()
    ranks: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("tree", "ranking", "graph"):
            raise ValueError(f"unknown estimate kind {self.kind!r}")


# ---------------------------------------------------------------------------
# spanning trees
# ---------------------------------------------------------------------------


def symmetric_edges(comm: CommGraph):
    """Unordered pairs ``lo < hi`` (by position) with weight ``A_uv + A_vu``."""
    n = comm.n_nodes
    lo = np.minimum(comm.src, comm.dst)
    hi = np.maximum(comm.src, comm.dst)
    key, inv = np.unique(lo * n + hi, return_inverse=True)
    w = np.bincount(inv, weights=comm.w, minlength=len(key)).astype(np.int64)
    return key // n, key % n, w


def spanning_tree(comm: CommGraph, objective: str = "max") -> HierarchyEstimate:
    """Kruskal on ``A + A.T``; ties go to the lexicographically smaller edge."""
    if objective not in ("min", "max"):
        raise ValueError("objective must be 'min' or 'max'")
    n = comm.n_nodes
    ids = comm.ids
    a, b, w = symmetric_edges(comm)
    # node ids are sorted, so position order is lexicographic id order
    order = np.lexsort((b, a, w if objective == "min" else -w))
    ds = DisjointSet(range(n))
    chosen = []
    for k in order.tolist():
        u, v = int(a[k]), int(b[k])
        if ds.merge(u, v):
            chosen.append((ids[u], ids[v]))
            if len(chosen) == n - 1:
                break
    if len(chosen) != max(n - 1, 0):
        raise Disconnected(f"communication graph has {ds.n_subsets} components")
    return HierarchyEstimate("tree", f"{objective}st", tuple(ids), tuple(sorted(chosen)))


# ---------------------------------------------------------------------------
# agony
# ---------------------------------------------------------------------------


def _binary_edges(comm: CommGraph):
    return comm.src.copy(), comm.dst.copy()


def agony_objective(src, dst, ranks) -> int:
    """``sum over edges (u, v) of max(rank[v] - rank[u] + 1, 0)``."""
    r = np.asarray(ranks, dtype=np.int64)
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    return int(np.maximum(r[dst] - r[src] + 1, 0).sum())


def _min_agony_ranks(n: int, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Exact minimum-agony ranks.

    The minimum equals the size of a largest Eulerian subgraph, found as a
    min-cost circulation with unit capacities and cost -1 per edge. Optimal
    ranks are shortest-path potentials of the complementary slackness
    constraints: an unused edge (u, v) needs ``r_v <= r_u - 1`` and a used
    one needs ``r_u <= r_v + 1``.
    """
    m = len(src)
    if m == 0:
        return np.zeros(n, dtype=np.int64)
    g = nx.DiGraph()
    g.add_nodes_from(range(n), demand=0)
    # parallel edges are impossible in a CommGraph, but (u, v) and (v, u) can
    # coexist; DiGraph keeps both as distinct arcs.
    for u, v in zip(src.tolist(), dst.tolist()):
        g.add_edge(u, v, capacity=1, weight=-1)
    _, flow = nx.network_simplex(g)
    used = np.fromiter((flow[u][v] for u, v in zip(src.tolist(), dst.tolist())),
                       dtype=np.int64, count=m)
    # constraint arcs x -> y with weight c encode r_y <= r_x + c
    ax = np.where(used == 1, dst, src)
    ay = np.where(used == 1, src, dst)
    ac = np.where(used == 1, 1, -1).astype(np.int64)
    r = np.zeros(n, dtype=np.int64)
    for _ in range(n + 1):
        cand = r[ax] + ac
        new = r.copy()
        np.minimum.at(new, ay, cand)
        if np.array_equal(new, r):
            break
        r = new
    else:  # pragma: no cover - an optimal circulation admits feasible potentials
        raise RuntimeError("agony potentials did not converge")
    r -= r.min()
    return r


def agony_ranking(comm: CommGraph) -> HierarchyEstimate:
    """Integer ranks of minimum total agony on the binary comm edges."""
    src, dst = _binary_edges(comm)
    r = _min_agony_ranks(comm.n_nodes, src, dst)
    ids = comm.ids
    edges = tuple((ids[u], ids[v]) for u, v in zip(src.tolist(), dst.tolist()))
    return HierarchyEstimate("ranking", "agony", tuple(ids), edges,
                             {u: int(r[i]) for i, u in enumerate(ids)})


def ranking_to_edges(estimate: HierarchyEstimate) -> set:
    """Child->parent edges implied by a ranking.

    Each comm edge is directed from the node with the larger rank (lower in
    the hierarchy) to the one with the smaller rank; edges within a rank are
    dropped.
    """
    r = estimate.ranks
    out = set()
    for u, v in estimate.edges:
        if r[u] > r[v]:
            out.add((u, v))
        elif r[v] > r[u]:
            out.add((v, u))
    return out


# ---------------------------------------------------------------------------
# greedy distance-decay placement
# ---------------------------------------------------------------------------


def distance_hierarchy(comm: CommGraph, decay: float = 1.0) -> HierarchyEstimate:
    """Greedy maximum-likelihood placement under ``p(d) = exp(-decay * d)``.

    Links are binary and undirected. The highest-degree node seeds the tree
    under a virtual root; then the unplaced node with most links to placed
    nodes is attached under whichever placed node (or the virtual root)
    maximizes the Bernoulli log-likelihood of its links and non-links to the
    placed nodes.
    """
    if decay <= 0:
        raise ValueError("decay must be positive")
    n = comm.n_nodes
    ids = comm.ids
    if n == 0:
        return HierarchyEstimate("graph", "distance", ())
    adj = np.zeros((n, n), dtype=bool)
    adj[comm.src, comm.dst] = True
    adj |= adj.T
    deg = adj.sum(axis=1)

    dmax = n + 2
    d = np.arange(dmax + 1, dtype=np.float64)
    p = np.minimum(np.exp(-decay * d), 1.0 - 1e-9)
    log_p = np.log(p)
    log_q = np.log1p(-p)

    vr = n  # virtual root slot
    dist = np.zeros((n + 1, n + 1), dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    placed = np.zeros(n, dtype=bool)
    order: list[int] = []          # placed real nodes, insertion order
    links = np.zeros(n, dtype=np.int64)

    seed = int(np.argmax(deg))
    parent[seed] = vr
    placed[seed] = True
    order.append(seed)
    dist[seed, vr] = dist[vr, seed] = 1
    links += adj[seed]

    for _ in range(n - 1):
        score = np.where(placed, -1, links)
        x = int(np.argmax(score))
        real = np.array(sorted(order), dtype=np.int64)
        cand = np.append(real, vr)
        e = adj[x, real]
        dd = dist[np.ix_(cand, real)] + 1
        ll = np.where(e, log_p[dd], log_q[dd]).sum(axis=1)
        # equal scores summed in different orders can differ in the last bits
        y = int(cand[int(np.argmax(np.round(ll, 9)))])
        parent[x] = y
        cols = np.append(np.array(order, dtype=np.int64), vr)
        dist[x, cols] = dist[y, cols] + 1
        dist[cols, x] = dist[x, cols]
        dist[x, y] = dist[y, x] = 1
        placed[x] = True
        order.append(x)
        links += adj[x]

    under_vr = int(np.count_nonzero(parent == vr))
    edges = []
    for i in range(n):
        if parent[i] == vr:
            if under_vr > 1:
                edges.append((ids[i], VIRTUAL_ROOT))
        else:
            edges.append((ids[i], ids[int(parent[i])]))
    nodes = tuple(ids) + ((VIRTUAL_ROOT,) if under_vr > 1 else ())
    return HierarchyEstimate("graph", "distance", nodes, tuple(sorted(edges)))


# ---------------------------------------------------------------------------
# orientation
# ---------------------------------------------------------------------------


def orient_from_root(estimate: HierarchyEstimate, true_root: str) -> OrgTree:
    """Direct a tree estimate away from ``true_root``.

    Graph estimates are accepted when their undirected skeleton is a tree
    over the real nodes (no virtual root).
    """
    if estimate.kind == "ranking":
        raise NotATree("a ranking is not a tree")
    nodes = [u for u in estimate.nodes if u != VIRTUAL_ROOT]
    if true_root not in nodes:
        raise RootAbsent(f"root {true_root!r} not in estimate")
    edges = [(a, b) for a, b in estimate.edges]
    if any(VIRTUAL_ROOT in e for e in edges):
        raise NotATree("estimate uses a virtual root")
    if len(edges) != len(nodes) - 1:
        raise NotATree(f"{len(edges)} edges on {len(nodes)} nodes")
    nbr: dict[str, list[str]] = {u: [] for u in nodes}
    for a, b in edges:
        nbr[a].append(b)
        nbr[b].append(a)
    par = {true_root: None}
    q = deque([true_root])
    while q:
        u = q.popleft()
        for v in sorted(nbr[u]):
            if v not in par:
                par[v] = u
                q.append(v)
    if len(par) != len(nodes):
        raise NotATree("estimate is not connected")
    return build_org_tree([(c, p) for c, p in par.items() if p is not None], root=true_root)
