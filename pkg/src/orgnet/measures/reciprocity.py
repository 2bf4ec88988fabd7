"""Reciprocity of email links and hierarchical position measures."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..errors import EmptyGraph
from ..model import CommGraph, Dataset


def reverse_weights(comm: CommGraph) -> np.ndarray:
    """For each stored edge (u, v), the count on (v, u) (0 if absent)."""
    n = comm.n_nodes
    key = comm.src * n + comm.dst
    rkey = comm.dst * n + comm.src
    at = np.searchsorted(key, rkey)
    at_c = np.minimum(at, max(len(key) - 1, 0))
    found = (at < len(key)) & (key[at_c] == rkey) if len(key) else np.zeros(0, bool)
    return np.where(found, comm.w[at_c], 0)


def network_reciprocity(comm: CommGraph, weighted: bool = False) -> float:
    """Share of links (or email volume) that is reciprocated.

    Unweighted: fraction of directed links whose reverse link exists.
    Weighted: ``sum min(A_uv, A_vu) / sum A_uv``.
    """
    if comm.n_edges == 0:
        raise EmptyGraph("reciprocity needs at least one link")
    rev = reverse_weights(comm)
    if weighted:
        return float(np.minimum(comm.w, rev).sum() / comm.w.sum())
    return float(np.count_nonzero(rev) / comm.n_edges)


def bootstrap_reciprocity(comm: CommGraph, weighted: bool = False, n_boot: int = 200,
                          seed: int = 0) -> tuple[float, float]:
    """Mean and SD of reciprocity over edge resamples (with replacement).

    A resample only matters through how many draws hit each distinct
    (numerator, denominator) edge class, so the draw counts are sampled as a
    multinomial over the classes. This has the same distribution as
    resampling the edges one by one, at a cost independent of the edge count.
    """
    if comm.n_edges == 0:
        raise EmptyGraph("reciprocity needs at least one link")
    rev = reverse_weights(comm)
    rng = np.random.default_rng(seed)
    m = comm.n_edges
    num = np.minimum(comm.w, rev) if weighted else (rev > 0).astype(np.int64)
    den = comm.w if weighted else np.ones(m, dtype=np.int64)
    cls, freq = np.unique(np.stack([num, den], axis=1), axis=0, return_counts=True)
    draws = rng.multinomial(m, freq / m, size=n_boot)
    stats = (draws @ cls[:, 0]) / (draws @ cls[:, 1])
    return float(stats.mean()), float(stats.std(ddof=1)) if n_boot > 1 else 0.0


def node_reciprocity(comm: CommGraph) -> dict[str, tuple]:
    """Per-node (SR, RR): sent and received reciprocation.

    A value is ``None`` when the node sent (received) nothing.
    """
    n = comm.n_nodes
    rev = reverse_weights(comm) > 0
    sent = np.bincount(comm.src, minlength=n)
    recv = np.bincount(comm.dst, minlength=n)
    sent_rec = np.bincount(comm.src[rev], minlength=n)
    recv_rec = np.bincount(comm.dst[rev], minlength=n)
    out = {}
    for i, u in enumerate(comm.ids):
        sr = sent_rec[i] / sent[i] if sent[i] else None
        rr = recv_rec[i] / recv[i] if recv[i] else None
        out[u] = (None if sr is None else float(sr), None if rr is None else float(rr))
    return out


class PositionRecord(NamedTuple):
    hp: float
    sp: float | None
    rp: float | None
    srd_hp: float
    srd_sp: float | None
    srd_rp: float | None
    relative_level: float


def positions(dataset: Dataset) -> dict[str, PositionRecord]:
    """Hierarchical, sent and received position for every team member.

    ``D_uv`` is +1 when u sits above v, 0 on the same level, -1 below; only
    partners inside u's team count. The SRD variants use the signed level
    difference ``level(u) - level(v)`` in place of ``D_uv``.
    """
    comm, tree, teams = dataset.comm, dataset.tree, dataset.teams
    ids = comm.ids
    n = len(ids)
    level = np.array([tree.level[u] for u in ids], dtype=np.int64)
    order = tuple(sorted(teams.teams))
    tcode = {t: i for i, t in enumerate(order)}
    code = np.array([tcode.get(teams.team_of.get(u), -1) for u in ids], dtype=np.int64)

    src, dst = comm.src, comm.dst
    inside = (code[src] >= 0) & (code[src] == code[dst])
    s, d = src[inside], dst[inside]
    dsign = np.sign(level[d] - level[s]).astype(np.float64)   # D_{s,d}
    srd = (level[s] - level[d]).astype(np.float64)             # SRD(s, d)
    n_sent = np.bincount(s, minlength=n)
    n_recv = np.bincount(d, minlength=n)
    sp_num = np.bincount(s, weights=dsign, minlength=n)
    rp_num = np.bincount(d, weights=dsign, minlength=n)      # D_{v,u} for receiver u
    srd_sp_num = np.bincount(s, weights=srd, minlength=n)
    srd_rp_num = np.bincount(d, weights=-srd, minlength=n)   # SRD(u, v) for receiver u

    out: dict[str, PositionRecord] = {}
    for t in order:
        members = np.array([comm.pos[u] for u in teams.members(t)], dtype=np.int64)
        m = len(members)
        lv = level[members]
        base = int(lv.min())
        depth = teams.team_depth[t]
        counts = np.bincount(lv - base)
        below = np.concatenate([np.cumsum(counts[::-1])[::-1][1:], [0]])
        above = np.concatenate([[0], np.cumsum(counts)[:-1]])
        total_level = lv.sum()
        for i in members.tolist():
            li = level[i] - base
            if m > 1:
                hp = float((below[li] - above[li]) / (m - 1))
                srd_hp = float((m * level[i] - total_level) / (m - 1))
            else:
                hp = srd_hp = 0.0
            ns, nr = n_sent[i], n_recv[i]
            out[ids[i]] = PositionRecord(
                hp=hp,
                sp=float(sp_num[i] / ns) if ns else None,
                rp=float(rp_num[i] / nr) if nr else None,
                srd_hp=srd_hp,
                srd_sp=float(srd_sp_num[i] / ns) if ns else None,
                srd_rp=float(srd_rp_num[i] / nr) if nr else None,
                relative_level=float(li / depth) if depth else 0.0,
            )
    return out
