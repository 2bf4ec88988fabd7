"""Reporting distances on an organizational tree.

For an ordered pair (u, v) the unique tree path climbs ``n_up`` steps from u
to the lowest common ancestor and then descends ``n_down`` steps to v. From
these:

* ``rd  = n_up + n_down``          (ordinary path length)
* ``srd = n_up - n_down``          (equals level(u) - level(v))
* ``drd = rd * sign(srd)``

The production path uses LCA queries. :func:`all_pairs_decomposition_dijkstra`
recovers the same counts from one weighted shortest-path run and serves as an
independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .errors import PrimeCapacityExceeded, UnknownTeam
from .io import csv_text
from .model import Dataset, OrgTree, TreeIndex

KINDS = ("RD", "SRD", "DRD")


class PathDecomposition(NamedTuple):
    n_up: int
    n_down: int


class ReportingDistances(NamedTuple):
    rd: int
    srd: int
    drd: int


def decompose_path(tree: OrgTree, u: str, v: str) -> PathDecomposition:
    tree._check(u, v)
    idx = tree.index
    w = idx.lca_idx(idx.pos[u], idx.pos[v])
    dw = int(idx.depth[w])
    return PathDecomposition(tree.level[u] - dw, tree.level[v] - dw)


def from_decomposition(n_up, n_down):
    """RD, SRD and DRD from step counts (scalars or arrays)."""
    rd = n_up + n_down
    srd = n_up - n_down
    return rd, srd, rd * np.sign(srd)


def reporting_distances(tree: OrgTree, u: str, v: str) -> ReportingDistances:
    up, down = decompose_path(tree, u, v)
    rd, srd, drd = from_decomposition(up, down)
    return ReportingDistances(int(rd), int(srd), int(drd))


def edge_agony(tree: OrgTree, u: str, v: str) -> int:
    """Agony of an email u -> v: ``max(srd(v, u) + 1, 0)``."""
    return max(reporting_distances(tree, v, u).srd + 1, 0)


def pair_decomposition(index: TreeIndex, u, v):
    """Vectorised ``(n_up, n_down)`` for integer node index arrays."""
    w = index.lca_idx(u, v)
    dw = index.depth[w]
    return index.depth[u] - dw, index.depth[v] - dw


def all_pairs_decomposition(tree: OrgTree) -> dict:
    """Every ordered pair's decomposition via LCA (the production path)."""
    idx = tree.index
    out = {}
    ids = idx.ids
    for u, v, up, down in iter_pair_blocks(idx):
        for a, b, x, y in zip(u.tolist(), v.tolist(), up.tolist(), down.tolist()):
            out[(ids[a], ids[b])] = PathDecomposition(x, y)
    return out


def iter_pair_blocks(index: TreeIndex, rows_per_block: int | None = None,
                     include_self: bool = True) -> Iterator[tuple]:
    """Yield ``(u, v, n_up, n_down)`` arrays covering all ordered pairs.

    Pairs are emitted in row-major order of node index.
    """
    n = index.n
    if rows_per_block is None:
        rows_per_block = max(1, (1 << 21) // max(n, 1))
    cols = np.arange(n, dtype=np.int64)
    for start in range(0, n, rows_per_block):
        stop = min(n, start + rows_per_block)
        u = np.repeat(np.arange(start, stop, dtype=np.int64), n)
        v = np.tile(cols, stop - start)
        if not include_self:
            keep = u != v
            u, v = u[keep], v[keep]
        up, down = pair_decomposition(index, u, v)
        yield u, v, up, down


def _is_prime(k: int) -> bool:
    if k < 2:
        return False
    f = 2
    while f * f <= k:
        if k % f == 0:
            return False
        f += 1
    return True


def next_prime_above(k: int) -> int:
    k += 1
    while not _is_prime(k):
        k += 1
    return k


def prime_weight_distances(tree: OrgTree, p: int = 101, q: int = 3) -> np.ndarray:
    """All-pairs shortest paths with downward edges weighing ``p`` and upward ``q``.

    Entry ``[a, b]`` (positions in ``tree.index.ids``) equals
    ``q*n_up + p*n_down`` for the path from a to b.
    """
    if not (_is_prime(p) and _is_prime(q)):
        raise ValueError(f"p={p} and q={q} must both be prime")
    if q * tree.depth >= p:
        raise PrimeCapacityExceeded(
            f"q*depth = {q}*{tree.depth} >= p = {p}; choose a larger p")
    idx = tree.index
    n = idx.n
    child = np.flatnonzero(idx.parent >= 0)
    par = idx.parent[child]
    rows = np.concatenate([par, child])
    cols = np.concatenate([child, par])
    vals = np.concatenate([np.full(len(child), p, float), np.full(len(child), q, float)])
    graph = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return np.rint(dijkstra(graph, directed=True)).astype(np.int64)


def decode_prime_distance(dist, p: int = 101, q: int = 3):
    """Invert ``d = q*n_up + p*n_down`` (valid while ``q*n_up < p``)."""
    dist = np.asarray(dist, dtype=np.int64)
    n_up = (dist % p) // q
    n_down = (dist - q * n_up) // p
    return n_up, n_down


def all_pairs_decomposition_dijkstra(tree: OrgTree, p: int = 101, q: int = 3,
                                     dynamic_primes: bool = False) -> dict:
    """Decompositions from a single weighted all-pairs shortest-path run.

    Decoding is exact only while ``q * depth < p``; with ``dynamic_primes``
    the smallest prime above ``q * depth`` is used for ``p``.
    """
    if dynamic_primes:
        p = next_prime_above(q * tree.depth)
    n_up, n_down = decode_prime_distance(prime_weight_distances(tree, p, q), p, q)
    ids = tree.index.ids
    n = len(ids)
    return {
        (ids[a], ids[b]): PathDecomposition(int(n_up[a, b]), int(n_down[a, b]))
        for a in range(n) for b in range(n)
    }


# ---------------------------------------------------------------------------
# pair-count histograms
# ---------------------------------------------------------------------------


def decomposition_histogram(index: TreeIndex) -> np.ndarray:
    """Matrix ``H[a, b]``: number of ordered pairs u != v with n_up=a, n_down=b.

    Computed bottom-up from per-subtree depth histograms, so the cost is
    independent of the number of pairs.
    """
    n = index.n
    depth = index.depth
    height = np.zeros(n, dtype=np.int64)
    order = index.preorder[::-1]
    par = index.parent
    for u in order:
        p = par[u]
        if p >= 0 and height[u] + 1 > height[p]:
            height[p] = height[u] + 1
    H = np.zeros((int(height.max()) + 1,) * 2, dtype=np.int64)
    hist: dict[int, np.ndarray] = {}
    ptr, cidx = index.child_ptr, index.child_idx
    for u in order.tolist():
        kids = cidx[ptr[u]:ptr[u + 1]]
        h = np.zeros(int(height[u]) + 1, dtype=np.int64)
        h[0] = 1
        if len(kids):
            sub = []
            for c in kids.tolist():
                hc = hist.pop(c)
                h[1:len(hc) + 1] += hc
                sub.append(hc)
            m = len(h)
            pairs = np.outer(h, h)
            for hc in sub:
                k = len(hc)
                pairs[1:k + 1, 1:k + 1] -= np.outer(hc, hc)
            pairs[0, 0] -= 1
            H[:m, :m] += pairs
        hist[u] = h
    return H


def pair_counts_by_kind(H: np.ndarray, kind: str) -> dict:
    """Pair counts per distance value from a decomposition histogram (RD unordered)."""
    a, b = np.indices(H.shape)
    rd, srd, drd = from_decomposition(a, b)
    key = {"RD": rd, "SRD": srd, "DRD": drd}[kind]
    out: dict[int, int] = {}
    for k, c in zip(key.ravel().tolist(), H.ravel().tolist()):
        if c:
            out[k] = out.get(k, 0) + c
    if kind == "RD":
        out = {k: c // 2 for k, c in out.items()}
    return out


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistanceProfile:
    """Per-distance pair counts and email summaries for one team.

    ``bins`` maps a distance value to ``(pair_count, mean_emails,
    frac_communicating)``.
    """

    kind: str
    bins: Mapping[int, tuple] = field(default_factory=dict)

    def rows(self):
        for d in sorted(self.bins):
            c, m, f = self.bins[d]
            yield (self.kind, d, c, m, f)

    def to_csv(self) -> str:
        return csv_text(PROFILE_HEADER, self.rows())


PROFILE_HEADER = ["kind", "distance", "pair_count", "mean_emails", "frac_communicating"]


def profile_from_edges(index: TreeIndex, src, dst, w, kind: str,
                       H: np.ndarray | None = None) -> DistanceProfile:
    """Profile for a tree given comm edges as index arrays into ``index.ids``."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if H is None:
        H = decomposition_histogram(index)
    counts = pair_counts_by_kind(H, kind)
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    w = np.asarray(w, dtype=np.float64)
    up, down = pair_decomposition(index, src, dst) if len(src) else (src, src)
    rd, srd, drd = from_decomposition(up, down)
    key = {"RD": rd, "SRD": srd, "DRD": drd}[kind]
    sums: dict[int, float] = {}
    hits: dict[int, int] = {}
    if len(key):
        uniq, inv = np.unique(key, return_inverse=True)
        s = np.bincount(inv, weights=w)
        for k, val in zip(uniq.tolist(), s.tolist()):
            sums[k] = val
        if kind == "RD":
            n = index.n
            lo = np.minimum(src, dst)
            hi = np.maximum(src, dst)
            pk, first = np.unique(lo * n + hi, return_index=True)
            hk, hc = np.unique(key[first], return_counts=True)
        else:
            hk, hc = np.unique(key, return_counts=True)
        hits = dict(zip(hk.tolist(), hc.tolist()))
    bins = {}
    for k in sorted(counts):
        c = counts[k]
        bins[k] = (c, sums.get(k, 0.0) / c, hits.get(k, 0) / c)
    return DistanceProfile(kind=kind, bins=bins)


def distance_profile(dataset: Dataset, team: str, kind: str) -> DistanceProfile:
    """Distance-conditioned communication summary within one team."""
    if team not in dataset.teams.team_root:
        raise UnknownTeam(team)
    tree = dataset.team_tree(team)
    comm = dataset.team_comm(team)
    return profile_from_edges(tree.index, comm.src, comm.dst, comm.w, kind)


def team_pair_arrays(dataset: Dataset, team: str, kind: str):
    """All ordered in-team pairs u != v with their distance and email count.

    Returns ``(u, v, distance, weight)`` index arrays over the team's sorted
    member ids.
    """
    tree = dataset.team_tree(team)
    comm = dataset.team_comm(team)
    return pair_arrays(tree.index, comm, kind)


def pair_arrays(index: TreeIndex, comm, kind: str):
    n = index.n
    parts = [[], [], [], []]
    dense = np.zeros(n * n, dtype=np.int64)
    dense[comm.src * n + comm.dst] = comm.w
    for u, v, up, down in iter_pair_blocks(index, include_self=False):
        rd, srd, drd = from_decomposition(up, down)
        d = {"RD": rd, "SRD": srd, "DRD": drd}[kind]
        parts[0].append(u)
        parts[1].append(v)
        parts[2].append(d)
        parts[3].append(dense[u * n + v])
    cat = [np.concatenate(p) if p else np.zeros(0, dtype=np.int64) for p in parts]
    return tuple(cat)
