"""Distances between a true tree and a reconstruction."""

from __future__ import annotations

import networkx as nx
import numpy as np

from ..errors import NodeSetMismatch, NotATree
from ..model import OrgTree
from .methods import VIRTUAL_ROOT, HierarchyEstimate, ranking_to_edges


def directed_edges(x) -> set:
    """Child->parent edge set of a tree, graph estimate or ranking.

    Virtual-root edges are dropped. Unoriented tree estimates are rejected.
    """
    if isinstance(x, OrgTree):
        return set(x.parent.items())
    if isinstance(x, HierarchyEstimate):
        if x.kind == "ranking":
            return ranking_to_edges(x)
        if x.kind == "graph":
            return {(a, b) for a, b in x.edges if VIRTUAL_ROOT not in (a, b)}
        raise NotATree("orient tree estimates before evaluating them")
    return set(x)


def _nodes(x) -> set:
    if isinstance(x, OrgTree):
        return set(x.nodes)
    if isinstance(x, HierarchyEstimate):
        return set(x.nodes) - {VIRTUAL_ROOT}
    raise TypeError(f"cannot take the node set of {type(x).__name__}")


def _check_same(t, est):
    a, b = _nodes(t), _nodes(est)
    if a != b:
        raise NodeSetMismatch(f"{len(a ^ b)} nodes differ between truth and estimate")
    return a


def tree_frobenius(t, est) -> float:
    """``sqrt(#entries where the adjacency indicators differ) / (n - 1)``."""
    nodes = _check_same(t, est)
    n = len(nodes)
    if n < 2:
        return 0.0
    diff = directed_edges(t) ^ directed_edges(est)
    return float(np.sqrt(len(diff)) / (n - 1))


def _betweenness(nodes, edges) -> dict:
    g = nx.Graph()
    g.add_nodes_from(nodes)
    g.add_edges_from(edges)
    return nx.betweenness_centrality(g, normalized=False)


def tree_centrality_distance(t, est) -> float:
    """``sqrt(sum_u (c_u - c'_u)^2) / (n - 1)`` with undirected betweenness c."""
    nodes = sorted(_check_same(t, est))
    n = len(nodes)
    if n < 2:
        return 0.0
    c = _betweenness(nodes, directed_edges(t))
    c2 = _betweenness(nodes, directed_edges(est))
    diff = np.array([c[u] - c2[u] for u in nodes])
    return float(np.sqrt(diff @ diff) / (n - 1))


def managers(x) -> set:
    """Nodes with at least one subordinate (an incoming child->parent edge)."""
    return {p for _, p in directed_edges(x)}


def manager_classification(t, est) -> float:
    """Fraction of nodes whose manager/non-manager status matches the truth."""
    nodes = _check_same(t, est)
    if not nodes:
        return 1.0
    wrong = managers(t) ^ managers(est)
    return 1.0 - len(wrong & nodes) / len(nodes)


def level_mse(t: OrgTree, est: OrgTree) -> dict[int, float]:
    """Cumulative squared level error over nodes with true level <= k."""
    _check_same(t, est)
    z = np.array([t.level[u] for u in t.nodes], dtype=np.int64)
    zh = np.array([est.level[u] for u in t.nodes], dtype=np.int64)
    err = (z - zh).astype(np.float64) ** 2
    depth = int(z.max()) if z.size else 0
    cnt = np.bincount(z, minlength=depth + 1)
    tot = np.bincount(z, weights=err, minlength=depth + 1)
    return {k: float(v) for k, v in enumerate(np.cumsum(tot) / np.cumsum(cnt))}
