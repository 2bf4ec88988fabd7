"""Core data model: organizational trees, communication graphs, team partitions.

Every type here is immutable after construction. Node ids are opaque strings;
whenever an integer indexing is needed, nodes are numbered in sorted id order
so that a tree and a communication graph over the same node set share one
indexing.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    CycleDetected,
    DisconnectedNode,
    DuplicateParent,
    MultipleRoots,
    NodeSetMismatch,
    SelfLoop,
    NegativeCount,
    UnknownNode,
    UnknownTeam,
)

LEADERSHIP = "__leadership__"
EXCLUDED = "__excluded__"


# ---------------------------------------------------------------------------
# trees
# ---------------------------------------------------------------------------


class TreeIndex:
    """Integer view of an :class:`OrgTree` with O(1) vectorised LCA queries.

    LCA uses an Euler tour and a sparse table of range minima over depth.
    """

    def __init__(self, tree: "OrgTree"):
        ids = tuple(sorted(tree.nodes))
        pos = {u: i for i, u in enumerate(ids)}
        n = len(ids)
        parent = np.full(n, -1, dtype=np.int64)
        for c, p in tree.parent.items():
            parent[pos[c]] = pos[p]
        depth = np.fromiter((tree.level[u] for u in ids), dtype=np.int64, count=n)

        # children in CSR form, sorted by child index
        order = np.argsort(parent, kind="stable")
        counts = np.bincount(parent[parent >= 0], minlength=n)
        child_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=child_ptr[1:])
        child_idx = order[n - int(counts.sum()):] if n else order

        self.ids = ids
        self.pos = pos
        self.n = n
        self.root = pos[tree.root]
        self.parent = parent
        self.depth = depth
        self.child_ptr = child_ptr
        self.child_idx = child_idx
        self._build_tour()

    def children(self, i: int) -> np.ndarray:
        return self.child_idx[self.child_ptr[i]:self.child_ptr[i + 1]]

    def _build_tour(self):
        n = self.n
        euler = np.empty(max(2 * n - 1, 1), dtype=np.int64)
        first = np.empty(n, dtype=np.int64)
        tin = np.empty(n, dtype=np.int64)
        tout = np.empty(n, dtype=np.int64)
        preorder = np.empty(n, dtype=np.int64)
        ptr, idx = self.child_ptr, self.child_idx
        k = 0
        t = 0
        stack = [(self.root, ptr[self.root])]
        first[self.root] = 0
        tin[self.root] = 0
        preorder[0] = self.root
        euler[0] = self.root
        k, t = 1, 1
        while stack:
            u, nxt = stack[-1]
            if nxt < ptr[u + 1]:
                v = int(idx[nxt])
                stack[-1] = (u, nxt + 1)
                first[v] = k
                tin[v] = t
                preorder[t] = v
                euler[k] = v
                k += 1
                t += 1
                stack.append((v, ptr[v]))
            else:
                stack.pop()
                tout[u] = t
                if stack:
                    euler[k] = stack[-1][0]
                    k += 1
        self.euler = euler
        self.first = first
        self.tin = tin
        self.tout = tout
        self.preorder = preorder

        m = len(euler)
        levels = [euler]
        span = 1
        edepth = self.depth
        while 2 * span <= m:
            prev = levels[-1]
            a = prev[: m - 2 * span + 1]
            b = prev[span: m - span + 1]
            levels.append(np.where(edepth[a] <= edepth[b], a, b))
            span *= 2
        self._sparse = levels

    def lca_idx(self, u, v):
        """LCA of integer node indices; accepts scalars or arrays."""
        fu = self.first[u]
        fv = self.first[v]
        lo = np.minimum(fu, fv)
        hi = np.maximum(fu, fv) + 1
        length = hi - lo
        k = np.floor(np.log2(length)).astype(np.int64)
        if np.ndim(k) == 0:
            table = self._sparse[int(k)]
            a = table[lo]
            b = table[hi - (1 << int(k))]
            return a if self.depth[a] <= self.depth[b] else b
        out = np.empty(np.shape(k), dtype=np.int64)
        for kk in np.unique(k):
            sel = k == kk
            table = self._sparse[int(kk)]
            a = table[lo[sel]]
            b = table[hi[sel] - (1 << int(kk))]
            out[sel] = np.where(self.depth[a] <= self.depth[b], a, b)
        return out

    def is_ancestor(self, a, d):
        """True where ``a`` is an ancestor of (or equal to) ``d``."""
        return (self.tin[a] <= self.tin[d]) & (self.tin[d] < self.tout[a])


@dataclass(frozen=True, eq=False)
class OrgTree:
    """A rooted reporting tree.

    ``parent`` maps every non-root node to its supervisor; ``level`` counts
    reporting steps below the root. Build through :func:`build_org_tree` or
    :meth:`from_parents`, which validate.
    """

    root: str
    parent: Mapping[str, str]
    nodes: frozenset
    level: Mapping[str, int]

    @classmethod
    def from_parents(cls, parent: Mapping[str, str], root: str) -> "OrgTree":
        edges = list(parent.items())
        return build_org_tree(edges, root=root)

    def __eq__(self, other):
        if not isinstance(other, OrgTree):
            return NotImplemented
        return self.root == other.root and dict(self.parent) == dict(other.parent)

    def __hash__(self):
        return hash((self.root, frozenset(self.parent.items())))

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, u):
        return u in self.nodes

    def __repr__(self):
        return f"OrgTree(root={self.root!r}, n={len(self.nodes)}, depth={self.depth})"

    @cached_property
    def children(self) -> Mapping[str, tuple]:
        ch: dict[str, list] = {u: [] for u in self.nodes}
        for c, p in self.parent.items():
            ch[p].append(c)
        return MappingProxyType({u: tuple(sorted(v)) for u, v in ch.items()})

    @cached_property
    def depth(self) -> int:
        return max(self.level.values()) if self.level else 0

    @cached_property
    def index(self) -> TreeIndex:
        return TreeIndex(self)

    def edges(self) -> list[tuple[str, str]]:
        """(child, parent) pairs in sorted order."""
        return sorted(self.parent.items())

    def leaves(self) -> frozenset:
        return frozenset(u for u, c in self.children.items() if not c)

    def _check(self, *nodes):
        for u in nodes:
            if u not in self.nodes:
                raise UnknownNode(u)


def build_org_tree(
    edges: Iterable[tuple[str, str]], root: str | None = None
) -> OrgTree:
    """Validate (child, parent) pairs and return an :class:`OrgTree`.

    The root is inferred as the unique node that never appears as a child.
    Passing ``root`` overrides inference, and is required for a singleton tree.
    """
    parent: dict[str, str] = {}
    dup: set[str] = set()
    nodes: set[str] = set()
    for c, p in edges:
        c, p = str(c), str(p)
        if c in parent and parent[c] != p:
            dup.add(c)
        parent[c] = p
        nodes.add(c)
        nodes.add(p)
    if dup:
        raise DuplicateParent("node has more than one parent", sorted(dup))
    if root is not None:
        root = str(root)
        nodes.add(root)
    if not nodes:
        raise MultipleRoots("empty edge list and no root declared")

    roots = sorted(u for u in nodes if u not in parent)
    if root is None:
        if len(roots) > 1:
            raise MultipleRoots("more than one node without a parent", roots)
        if not roots:
            raise CycleDetected("every node has a parent", sorted(nodes))
        root = roots[0]
    else:
        if root in parent:
            raise CycleDetected("declared root has a parent", [root])
        stray = [u for u in roots if u != root]
        if stray:
            raise DisconnectedNode("node not connected to the declared root", stray)

    children: dict[str, list[str]] = {}
    for c, p in parent.items():
        children.setdefault(p, []).append(c)
    level = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        lu = level[u] + 1
        for c in children.get(u, ()):
            level[c] = lu
            queue.append(c)
    if len(level) != len(nodes):
        unreached = set(nodes) - level.keys()
        raise CycleDetected("reporting cycle", sorted(_cycle_members(parent, unreached)))
    return OrgTree(
        root=root,
        parent=MappingProxyType(parent),
        nodes=frozenset(nodes),
        level=MappingProxyType(level),
    )


def _cycle_members(parent, unreached):
    on_cycle = set()
    for start in unreached:
        seen = []
        seen_set = set()
        u = start
        while u in unreached and u not in seen_set and u not in on_cycle:
            seen.append(u)
            seen_set.add(u)
            u = parent[u]
        if u in seen_set:
            on_cycle.update(seen[seen.index(u):])
    return on_cycle or unreached


def lca(tree: OrgTree, u: str, v: str) -> str:
    """Deepest common ancestor of ``u`` and ``v``."""
    tree._check(u, v)
    idx = tree.index
    return idx.ids[int(idx.lca_idx(idx.pos[u], idx.pos[v]))]


def subtree(tree: OrgTree, new_root: str) -> OrgTree:
    """The subtree hanging from ``new_root`` with levels re-based to it."""
    tree._check(new_root)
    if new_root == tree.root:
        return tree
    idx = tree.index
    r = idx.pos[new_root]
    members = idx.preorder[idx.tin[r]:idx.tout[r]]
    base = tree.level[new_root]
    parent = {}
    level = {}
    for i in members:
        u = idx.ids[i]
        level[u] = tree.level[u] - base
        if u != new_root:
            parent[u] = tree.parent[u]
    return OrgTree(
        root=new_root,
        parent=MappingProxyType(parent),
        nodes=frozenset(level),
        level=MappingProxyType(level),
    )


# ---------------------------------------------------------------------------
# communication graphs
# ---------------------------------------------------------------------------


class CommGraph:
    """Sparse directed weighted graph of email counts.

    Stored as COO arrays over ``ids`` (sorted), ordered by (src, dst).
    Only positive counts are stored; self-loops are rejected.
    """

    __slots__ = ("ids", "src", "dst", "w", "__dict__")

    def __init__(self, weights: Mapping[tuple[str, str], int] | None = None,
                 nodes: Iterable[str] = ()):
        weights = dict(weights or {})
        node_set = set(map(str, nodes))
        for (u, v) in weights:
            node_set.add(str(u))
            node_set.add(str(v))
        ids = tuple(sorted(node_set))
        pos = {u: i for i, u in enumerate(ids)}
        m = len(weights)
        src = np.empty(m, dtype=np.int64)
        dst = np.empty(m, dtype=np.int64)
        w = np.empty(m, dtype=np.int64)
        for k, ((u, v), c) in enumerate(weights.items()):
            src[k] = pos[str(u)]
            dst[k] = pos[str(v)]
            w[k] = c
        self._init_arrays(ids, src, dst, w)

    @classmethod
    def from_arrays(cls, ids: Sequence[str], src, dst, w, *, sort_ids=True) -> "CommGraph":
        """Build from integer endpoint arrays indexing into ``ids``.

        Duplicate (src, dst) entries are summed.
        """
        g = cls.__new__(cls)
        ids = tuple(ids)
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        w = np.asarray(w, dtype=np.int64)
        if sort_ids and any(ids[i] > ids[i + 1] for i in range(len(ids) - 1)):
            order = np.argsort(np.array(ids, dtype=object), kind="stable")
            remap = np.empty(len(ids), dtype=np.int64)
            remap[order] = np.arange(len(ids))
            ids = tuple(ids[i] for i in order)
            src, dst = remap[src], remap[dst]
        g._init_arrays(ids, src, dst, w)
        return g

    def _init_arrays(self, ids, src, dst, w):
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node ids")
        if np.any(src == dst):
            k = int(np.flatnonzero(src == dst)[0])
            raise SelfLoop(f"self-loop on {ids[src[k]]!r}")
        if np.any(w <= 0):
            raise NegativeCount("edge counts must be positive")
        n = len(ids)
        if len(src):
            key = src * n + dst
            if np.any(key[1:] < key[:-1]):
                order = np.argsort(key, kind="stable")
                key, w = key[order], w[order]
            if np.any(key[1:] == key[:-1]):
                start = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
                key, w = key[start], np.add.reduceat(w, start)
            src, dst = key // n, key % n
        self.ids = ids
        self.src = src.astype(np.int64)
        self.dst = dst.astype(np.int64)
        self.w = w.astype(np.int64)
        for a in (self.src, self.dst, self.w):
            a.setflags(write=False)

    # -- basic accessors --

    @property
    def nodes(self) -> frozenset:
        return frozenset(self.ids)

    @cached_property
    def pos(self) -> dict:
        return {u: i for i, u in enumerate(self.ids)}

    @property
    def n_nodes(self) -> int:
        return len(self.ids)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @property
    def total(self) -> int:
        return int(self.w.sum())

    @cached_property
    def weights(self) -> Mapping[tuple[str, str], int]:
        ids = self.ids
        return MappingProxyType({
            (ids[a], ids[b]): int(c) for a, b, c in zip(self.src, self.dst, self.w)
        })

    def weight(self, u: str, v: str) -> int:
        return self.weights.get((u, v), 0)

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        n = self.n_nodes
        return sp.csr_matrix((self.w, (self.src, self.dst)), shape=(n, n))

    def __eq__(self, other):
        if not isinstance(other, CommGraph):
            return NotImplemented
        return (
            self.ids == other.ids
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.w, other.w)
        )

    __hash__ = None

    def __repr__(self):
        return f"CommGraph(n={self.n_nodes}, edges={self.n_edges}, emails={self.total})"

    def subgraph(self, nodes: Iterable[str]) -> "CommGraph":
        """Induced subgraph on ``nodes`` (which must be known)."""
        keep = sorted(set(nodes))
        pos = self.pos
        for u in keep:
            if u not in pos:
                raise UnknownNode(u)
        sel = np.zeros(self.n_nodes, dtype=bool)
        new = np.full(self.n_nodes, -1, dtype=np.int64)
        kidx = np.array([pos[u] for u in keep], dtype=np.int64)
        sel[kidx] = True
        new[kidx] = np.arange(len(keep))
        e = sel[self.src] & sel[self.dst]
        return CommGraph.from_arrays(keep, new[self.src[e]], new[self.dst[e]], self.w[e],
                                     sort_ids=False)

    def with_edges(self, extra: Mapping[tuple[str, str], int]) -> "CommGraph":
        """Copy with extra counts added (summed into existing edges)."""
        if not extra:
            return self
        pos = self.pos
        es = np.array([pos[u] for u, _ in extra], dtype=np.int64)
        ed = np.array([pos[v] for _, v in extra], dtype=np.int64)
        ew = np.array(list(extra.values()), dtype=np.int64)
        return CommGraph.from_arrays(
            self.ids, np.concatenate([self.src, es]), np.concatenate([self.dst, ed]),
            np.concatenate([self.w, ew]), sort_ids=False,
        )

    def strength(self) -> np.ndarray:
        """Total (in + out) email volume per node index."""
        n = self.n_nodes
        return (np.bincount(self.src, self.w, minlength=n)
                + np.bincount(self.dst, self.w, minlength=n)).astype(np.int64)


# ---------------------------------------------------------------------------
# teams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TeamPartition:
    """Team and division membership derived from the tree.

    Team and division ids are the employee ids of the team leader and the
    division leader. Nodes above ``team_level`` are leadership; members of
    teams under the size threshold are excluded. Both keep their labels.
    """

    team_of: Mapping[str, str]
    division_of: Mapping[str, str]
    team_root: Mapping[str, str]
    team_depth: Mapping[str, int]
    leadership: frozenset = frozenset()
    excluded: frozenset = frozenset()
    team_level: int = 2
    min_size: int = 100

    @property
    def teams(self) -> tuple:
        return tuple(sorted(self.team_root))

    @cached_property
    def _members(self) -> Mapping[str, tuple]:
        out: dict[str, list] = {t: [] for t in self.team_root}
        for u, t in self.team_of.items():
            out[t].append(u)
        return MappingProxyType({t: tuple(sorted(m)) for t, m in out.items()})

    def members(self, team: str) -> tuple:
        try:
            return self._members[team]
        except KeyError:
            raise UnknownTeam(team) from None

    def size(self, team: str) -> int:
        return len(self.members(team))

    def label(self, u: str) -> str:
        t = self.team_of.get(u)
        if t is not None:
            return t
        if u in self.leadership:
            return LEADERSHIP
        return EXCLUDED

    def labels(self, nodes: Iterable[str]) -> dict:
        return {u: self.label(u) for u in nodes}


def extract_teams(tree: OrgTree, team_level: int = 2, min_size: int = 100) -> TeamPartition:
    """Split the tree into team subtrees rooted at ``team_level``."""
    if team_level < 1:
        raise ValueError("team_level must be >= 1")
    idx = tree.index
    team_of: dict[str, str] = {}
    division_of: dict[str, str] = {}
    team_root: dict[str, str] = {}
    team_depth: dict[str, int] = {}
    excluded: set[str] = set()
    leadership = frozenset(u for u, l in tree.level.items() if l < team_level)
    for leader in sorted(u for u, l in tree.level.items() if l == team_level):
        r = idx.pos[leader]
        members = [idx.ids[i] for i in idx.preorder[idx.tin[r]:idx.tout[r]]]
        if len(members) < min_size:
            excluded.update(members)
            continue
        div = tree.parent[leader]
        team_root[leader] = leader
        team_depth[leader] = max(tree.level[u] for u in members) - team_level
        for u in members:
            team_of[u] = leader
            division_of[u] = div
    return TeamPartition(
        team_of=MappingProxyType(team_of),
        division_of=MappingProxyType(division_of),
        team_root=MappingProxyType(team_root),
        team_depth=MappingProxyType(team_depth),
        leadership=leadership,
        excluded=frozenset(excluded),
        team_level=team_level,
        min_size=min_size,
    )


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    tree: OrgTree
    comm: CommGraph
    teams: TeamPartition
    provenance: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.tree.nodes != self.comm.nodes:
            diff = sorted(self.tree.nodes ^ self.comm.nodes)
            raise NodeSetMismatch(f"tree and comm node sets differ: {diff[:10]}")

    @cached_property
    def team_trees(self) -> Mapping[str, OrgTree]:
        return MappingProxyType({t: subtree(self.tree, r) for t, r in self.teams.team_root.items()})

    def team_tree(self, team: str) -> OrgTree:
        if team not in self.teams.team_root:
            raise UnknownTeam(team)
        return self.team_trees[team]

    def team_comm(self, team: str) -> CommGraph:
        return self.comm.subgraph(self.teams.members(team))
