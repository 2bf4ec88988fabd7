"""Synthetic organizations with planted distance-decay communication.

Email counts are Poisson with mean ``alpha * f(beta * |d(u, v)|)`` where d is
a reporting distance in the tree. All randomness comes from Philox streams
keyed on ``(seed, block)``, so output depends only on the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import from_decomposition, pair_decomposition
from .ingest import clean
from .model import CommGraph, Dataset, OrgTree, build_org_tree

ROWS_PER_BLOCK = 64


def _rng(*key) -> np.random.Generator:
    ss = np.random.SeedSequence([int(k) & 0xFFFFFFFF for k in key])
    return np.random.Generator(np.random.Philox(key=ss.generate_state(2, dtype=np.uint64)))


@dataclass(frozen=True)
class CommModel:
    """Expected email count as a function of reporting distance.

    ``beta_up``/``beta_down`` override ``beta`` for pairs whose signed
    distance is positive (u below v) or negative; they only matter for the
    SRD and DRD kinds.
    """

    distance_kind: str = "RD"
    alpha: float = 20.0
    beta: float = 1.5
    form: str = "exponential"
    beta_up: float | None = None
    beta_down: float | None = None

    def __post_init__(self):
        if self.distance_kind not in ("RD", "SRD", "DRD"):
            raise ValueError(f"unknown distance kind {self.distance_kind!r}")
        if self.form not in ("exponential", "power"):
            raise ValueError(f"unknown form {self.form!r}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")

    def rate(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=np.float64)
        beta = np.full(d.shape, self.beta)
        if self.beta_up is not None:
            beta = np.where(d > 0, self.beta_up, beta)
        if self.beta_down is not None:
            beta = np.where(d < 0, self.beta_down, beta)
        x = beta * np.abs(d)
        if self.form == "exponential":
            return self.alpha * np.exp(-x)
        return self.alpha * (1.0 + x) ** -1.0


def random_org_tree(n: int, mean_branching: float = 5.0, seed: int = 0,
                    prefix: str = "e") -> OrgTree:
    """Random recursive tree whose internal nodes average ``mean_branching`` children.

    Each new node joins a uniformly chosen leaf with probability
    ``1/mean_branching`` (turning it into a manager) and otherwise a uniformly
    chosen existing manager. Since roughly one node in ``mean_branching``
    becomes a manager, managers end up with about ``mean_branching``
    reports each.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if mean_branching < 1:
        raise ValueError("mean_branching must be >= 1")
    width = len(str(n - 1))
    names = [f"{prefix}{i:0{width}d}" for i in range(n)]
    if n == 1:
        return build_org_tree([], root=names[0])
    rng = _rng(seed, 0x7EE)
    p_leaf = 1.0 / mean_branching
    coin = rng.random(n)
    pick = rng.random(n)
    leaves = [0]
    internal: list[int] = []
    parent = np.empty(n, dtype=np.int64)
    for i in range(1, n):
        if not internal or coin[i] < p_leaf:
            j = int(pick[i] * len(leaves))
            p = leaves[j]
            last = leaves.pop()
            if last != p:
                leaves[j] = last
            internal.append(p)
        else:
            p = internal[int(pick[i] * len(internal))]
        parent[i] = p
        leaves.append(i)
    return build_org_tree(((names[i], names[parent[i]]) for i in range(1, n)), root=names[0])


def sample_comm(tree: OrgTree, model: CommModel, seed: int = 0) -> CommGraph:
    """Draw a Poisson email count for every ordered pair of distinct nodes."""
    idx = tree.index
    n = idx.n
    if model.alpha == 0 or n < 2:
        return CommGraph.from_arrays(idx.ids, [], [], [], sort_ids=False)
    src_parts, dst_parts, w_parts = [], [], []
    cols = np.arange(n, dtype=np.int64)
    for b, start in enumerate(range(0, n, ROWS_PER_BLOCK)):
        stop = min(n, start + ROWS_PER_BLOCK)
        u = np.repeat(np.arange(start, stop, dtype=np.int64), n)
        v = np.tile(cols, stop - start)
        keep = u != v
        u, v = u[keep], v[keep]
        up, down = pair_decomposition(idx, u, v)
        rd, srd, drd = from_decomposition(up, down)
        d = {"RD": rd, "SRD": srd, "DRD": drd}[model.distance_kind]
        counts = _rng(seed, b).poisson(model.rate(d))
        hit = counts > 0
        src_parts.append(u[hit])
        dst_parts.append(v[hit])
        w_parts.append(counts[hit])
    return CommGraph.from_arrays(idx.ids, np.concatenate(src_parts), np.concatenate(dst_parts),
                                 np.concatenate(w_parts), sort_ids=False)


def planted_suite(n_teams: int, team_size: int, model: CommModel | None = None, seed: int = 0,
                  *, n_divisions: int | None = None, mean_branching: float = 5.0,
                  between_rate: float = 1e-3, team_sizes=None, min_size: int = 1) -> Dataset:
    """A root, a division layer, and ``n_teams`` planted team subtrees.

    Within-team traffic follows ``model``; every ordered pair of nodes in
    different teams (or involving leadership) independently carries a
    single email with probability ``between_rate``. The result has been
    through the cleaning pipeline with ``team_level=2``.
    """
    if n_teams < 1:
        raise ValueError("n_teams must be >= 1")
    model = model or CommModel()
    if n_divisions is None:
        n_divisions = max(1, int(round(np.sqrt(n_teams))))
    n_divisions = min(n_divisions, n_teams)
    sizes = list(team_sizes) if team_sizes is not None else [team_size] * n_teams
    if len(sizes) != n_teams:
        raise ValueError("team_sizes must have n_teams entries")
    tw = len(str(n_teams - 1))
    dw = len(str(n_divisions - 1))
    root = "ceo"
    edges = []
    for k in range(n_divisions):
        edges.append((f"d{k:0{dw}d}", root))

    ids_all = [root] + [f"d{k:0{dw}d}" for k in range(n_divisions)]
    team_ids = []
    src_parts, dst_parts, w_parts = [], [], []
    offset = len(ids_all)
    for t in range(n_teams):
        ts = _team_seed(seed, t)
        sub = random_org_tree(sizes[t], mean_branching, ts, prefix=f"t{t:0{tw}d}e")
        div = f"d{t % n_divisions:0{dw}d}"
        edges.append((sub.root, div))
        edges.extend(sub.parent.items())
        c = sample_comm(sub, model, ts)
        src_parts.append(c.src + offset)
        dst_parts.append(c.dst + offset)
        w_parts.append(c.w)
        ids_all.extend(c.ids)
        team_ids.append(np.full(len(c.ids), t, dtype=np.int64))
        offset += len(c.ids)
    n = len(ids_all)
    team_code = np.concatenate([np.full(1 + n_divisions, -1, dtype=np.int64)] + team_ids)

    if between_rate > 0:
        rng = _rng(seed, 0xB7)
        sizes_arr = np.bincount(team_code[team_code >= 0], minlength=n_teams)
        n_cross = n * (n - 1) - int(np.sum(sizes_arr * (sizes_arr - 1)))
        m = rng.binomial(n_cross, between_rate)
        # m distinct uniform cross pairs == independent Bernoulli per pair
        key = np.zeros(0, dtype=np.int64)
        while len(key) < m:
            k = int((m - len(key)) * 1.2) + 16
            s = rng.integers(0, n, k)
            d = rng.integers(0, n, k)
            ok = (s != d) & ((team_code[s] < 0) | (team_code[s] != team_code[d]))
            key = np.concatenate([key, s[ok] * n + d[ok]])
            _, first = np.unique(key, return_index=True)
            key = key[np.sort(first)]
        key = key[:m]
        src_parts.append(key // n)
        dst_parts.append(key % n)
        w_parts.append(np.ones(m, dtype=np.int64))

    tree = build_org_tree(edges, root=root)
    comm = CommGraph.from_arrays(ids_all, np.concatenate(src_parts), np.concatenate(dst_parts),
                                 np.concatenate(w_parts))
    comm = _with_nodes(comm, tree.nodes)
    ds = clean(tree, comm, team_level=2, min_size=min_size)
    ds.provenance["synth"] = {
        "n_teams": n_teams, "team_sizes": sizes, "n_divisions": n_divisions,
        "model": model.__dict__.copy(), "seed": seed, "between_rate": between_rate,
        "mean_branching": mean_branching,
    }
    return ds


def _team_seed(seed: int, t: int) -> int:
    return int(np.random.SeedSequence([seed & 0xFFFFFFFF, t]).generate_state(1)[0])


def _with_nodes(comm: CommGraph, nodes) -> CommGraph:
    missing = sorted(set(nodes) - set(comm.ids))
    if not missing:
        return comm
    ids = comm.ids + tuple(missing)
    return CommGraph.from_arrays(ids, comm.src, comm.dst, comm.w)
