"""Team-level communication structure: modularity, mixing, EI-index, group rates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..model import CommGraph, Dataset


def _unordered_pairs(comm: CommGraph) -> np.ndarray:
    """Sorted unique keys ``lo*n + hi`` of node pairs with any email."""
    n = comm.n_nodes
    lo = np.minimum(comm.src, comm.dst)
    hi = np.maximum(comm.src, comm.dst)
    return np.unique(lo * n + hi)


def _labels_to_codes(labels):
    uniq, codes = np.unique(np.asarray(labels, dtype=object).astype(str), return_inverse=True)
    return uniq, codes


def weighted_modularity(comm: CommGraph, partition: Mapping[str, object]) -> float:
    """Newman modularity of the symmetrised graph ``A + A.T``."""
    missing = [u for u in comm.ids if u not in partition]
    if missing:
        raise ValueError(f"partition does not cover nodes: {missing[:10]}")
    two_m = 2.0 * comm.total
    if two_m == 0:
        return 0.0
    _, codes = _labels_to_codes([partition[u] for u in comm.ids])
    k = codes.max() + 1
    strength = comm.strength().astype(np.float64)
    s_c = np.bincount(codes, weights=strength, minlength=k)
    same = codes[comm.src] == codes[comm.dst]
    w_in = np.bincount(codes[comm.src[same]], weights=2.0 * comm.w[same], minlength=k)
    return float(np.sum(w_in / two_m - (s_c / two_m) ** 2))


@dataclass(frozen=True)
class MixingMatrix:
    """Fraction of employee pairs in teams (i, j) that exchanged any email."""

    teams: tuple
    values: np.ndarray

    def rows(self):
        for i, a in enumerate(self.teams):
            for j, b in enumerate(self.teams):
                yield (a, b, float(self.values[i, j]))


def _team_codes(dataset: Dataset, order):
    code = {t: i for i, t in enumerate(order)}
    tof = dataset.teams.team_of
    return np.array([code.get(tof.get(u), -1) for u in dataset.comm.ids], dtype=np.int64)


def team_order(dataset: Dataset) -> tuple:
    """Teams grouped by division, then by team id."""
    teams = dataset.teams
    return tuple(sorted(teams.teams, key=lambda t: (teams.division_of[t], t)))


def team_mixing_matrix(dataset: Dataset) -> MixingMatrix:
    order = team_order(dataset)
    k = len(order)
    codes = _team_codes(dataset, order)
    n = dataset.comm.n_nodes
    keys = _unordered_pairs(dataset.comm)
    ci, cj = codes[keys // n], codes[keys % n]
    ok = (ci >= 0) & (cj >= 0)
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (ci[ok], cj[ok]), 1)
    counts = counts + counts.T - np.diag(np.diag(counts))
    sizes = np.array([dataset.teams.size(t) for t in order], dtype=np.float64)
    denom = np.outer(sizes, sizes)
    np.fill_diagonal(denom, sizes * (sizes - 1) / 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.where(denom > 0, counts / np.where(denom > 0, denom, 1), 0.0)
    return MixingMatrix(teams=order, values=vals)


@dataclass(frozen=True)
class EIRecord:
    """Per-team and organisation EI-index; ``None`` where undefined."""

    per_team: Mapping[str, float | None]
    organization: float | None
    external: Mapping[str, float]
    internal: Mapping[str, float]
    weighted: bool

    def rows(self):
        for t in sorted(self.per_team):
            yield (t, self.external[t], self.internal[t], self.per_team[t])


def ei_index(dataset: Dataset, weighted: bool = False) -> EIRecord:
    """External-internal index per team.

    Links are unordered employee pairs with email in either direction;
    external links reach any node outside the team, leadership included.
    The weighted variant sums ``A_uv + A_vu`` instead of counting pairs.
    """
    order = tuple(sorted(dataset.teams.teams))
    k = len(order)
    codes = _team_codes(dataset, order)
    comm = dataset.comm
    if weighted:
        ci, cj, val = codes[comm.src], codes[comm.dst], comm.w.astype(np.float64)
    else:
        n = comm.n_nodes
        keys = _unordered_pairs(comm)
        ci, cj = codes[keys // n], codes[keys % n]
        val = np.ones(len(keys))
    internal = np.bincount(ci[(ci == cj) & (ci >= 0)], weights=val[(ci == cj) & (ci >= 0)],
                           minlength=k)
    cross = ci != cj
    external = (np.bincount(ci[cross & (ci >= 0)], weights=val[cross & (ci >= 0)], minlength=k)
                + np.bincount(cj[cross & (cj >= 0)], weights=val[cross & (cj >= 0)], minlength=k))
    per_team = {}
    for i, t in enumerate(order):
        tot = external[i] + internal[i]
        per_team[t] = float((external[i] - internal[i]) / tot) if tot > 0 else None
    tot = external.sum() + internal.sum()
    org = float((external.sum() - internal.sum()) / tot) if tot > 0 else None
    return EIRecord(
        per_team=per_team,
        organization=org,
        external=dict(zip(order, external.tolist())),
        internal=dict(zip(order, internal.tolist())),
        weighted=weighted,
    )


GROUP_KINDS = ("all", "same_level", "same_division", "same_team", "same_supervisor")


def group_comm_rates(dataset: Dataset) -> dict[str, float]:
    """Fraction of unordered pairs in each relation that exchanged email.

    Division and team relations only cover members of retained teams.
    """
    comm, tree, teams = dataset.comm, dataset.tree, dataset.teams
    ids = comm.ids
    n = len(ids)
    keys = _unordered_pairs(comm)
    a, b = keys // n, keys % n

    def rate(group_of):
        """group_of: int array, -1 meaning 'not in any group'."""
        g = group_of[group_of >= 0]
        sizes = np.bincount(g) if g.size else np.zeros(0, dtype=np.int64)
        denom = int(np.sum(sizes * (sizes - 1) // 2))
        if denom == 0:
            return 0.0
        hit = (group_of[a] >= 0) & (group_of[a] == group_of[b])
        return int(hit.sum()) / denom

    def codes(values):
        uniq = {v: i for i, v in enumerate(sorted({v for v in values if v is not None}))}
        return np.array([-1 if v is None else uniq[v] for v in values], dtype=np.int64)

    out = {
        "all": (len(keys) / (n * (n - 1) / 2)) if n > 1 else 0.0,
        "same_level": rate(codes([tree.level[u] for u in ids])),
        "same_division": rate(codes([teams.division_of.get(u) for u in ids])),
        "same_team": rate(codes([teams.team_of.get(u) for u in ids])),
        "same_supervisor": rate(codes([tree.parent.get(u) for u in ids])),
    }
    return out
