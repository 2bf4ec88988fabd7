"""Small statistical helpers: OLS, binned summaries, team-level correlations."""

from __future__ import annotations

from typing import Callable, NamedTuple, Sequence

import numpy as np

from ..errors import DegenerateDesign, UnknownStatistic
from ..model import CommGraph, Dataset, OrgTree
from .degree import degree_arrays


class OLSResult(NamedTuple):
    beta0: float
    beta1: float
    se0: float
    se1: float


def ols(x, y) -> OLSResult:
    """Simple linear regression ``y = beta0 + beta1 * x`` with classical SEs."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    n = x.size
    if n < 3:
        raise DegenerateDesign(f"need at least 3 points, got {n}")
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx == 0.0 or np.all(x == x[0]):
        raise DegenerateDesign("x is constant")
    b1 = float(dx @ (y - ym)) / sxx
    b0 = ym - b1 * xm
    resid = y - b0 - b1 * x
    s2 = float(resid @ resid) / (n - 2)
    se1 = np.sqrt(s2 / sxx)
    se0 = np.sqrt(s2 * (1.0 / n + xm * xm / sxx))
    return OLSResult(float(b0), float(b1), float(se0), float(se1))


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    den = np.sqrt((dx @ dx) * (dy @ dy))
    if den == 0:
        return float("nan")
    return float((dx @ dy) / den)


class Bin(NamedTuple):
    lo: float
    hi: float
    count: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    mean: float


def binned_curve(x, y, bins: int = 10) -> list[Bin]:
    """Equal-width bins over the range of ``x`` with per-bin summaries of ``y``.

    Empty bins are reported with count 0 and NaN statistics. When every x is
    equal there is a single bin.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size == 0:
        raise ValueError("x is empty")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        edges = np.array([lo, hi])
    else:
        edges = np.linspace(lo, hi, bins + 1)
    k = len(edges) - 1
    which = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, k - 1)
    out = []
    for b in range(k):
        yb = y[which == b]
        if yb.size:
            q = np.percentile(yb, [0, 25, 50, 75, 100])
            out.append(Bin(float(edges[b]), float(edges[b + 1]), int(yb.size), *map(float, q),
                           float(yb.mean())))
        else:
            nan = float("nan")
            out.append(Bin(float(edges[b]), float(edges[b + 1]), 0, nan, nan, nan, nan, nan, nan))
    return out


# ---------------------------------------------------------------------------
# team-level statistics
# ---------------------------------------------------------------------------


def _tree_branching(t: OrgTree) -> float:
    internal = [len(c) for c in t.children.values() if c]
    return float(np.mean(internal)) if internal else 0.0


def _pairs(n):
    return n * (n - 1) / 2


TREE_STATS: dict[str, Callable[[OrgTree], float]] = {
    "size": lambda t: float(len(t)),
    "depth": lambda t: float(t.depth),
    "mean_degree": lambda t: 2.0 * (len(t) - 1) / len(t),
    "density": lambda t: (len(t) - 1) / _pairs(len(t)) if len(t) > 1 else 0.0,
    "mean_strength": lambda t: 2.0 * (len(t) - 1) / len(t),
    "mean_branching": _tree_branching,
}


def _comm_density(c: CommGraph) -> float:
    n = c.n_nodes
    if n < 2:
        return 0.0
    return float(degree_arrays(c)["total_degree"].sum() / 2 / _pairs(n))


def _comm_branching(c: CommGraph) -> float:
    out = degree_arrays(c)["out_degree"]
    out = out[out > 0]
    return float(out.mean()) if out.size else 0.0


COMM_STATS: dict[str, Callable[[CommGraph], float]] = {
    "size": lambda c: float(c.n_nodes),
    "mean_degree": lambda c: float(degree_arrays(c)["total_degree"].mean()) if c.n_nodes else 0.0,
    "density": _comm_density,
    "mean_strength": lambda c: float(degree_arrays(c)["total_strength"].mean()) if c.n_nodes else 0.0,
    "mean_branching": _comm_branching,
}


def team_stat_table(dataset: Dataset, tree_stats: Sequence[str], comm_stats: Sequence[str]):
    """Rows of (team, {tree stats}, {comm stats})."""
    for name in tree_stats:
        if name not in TREE_STATS:
            raise UnknownStatistic(name)
    for name in comm_stats:
        if name not in COMM_STATS:
            raise UnknownStatistic(name)
    rows = []
    for t in sorted(dataset.teams.teams):
        tt = dataset.team_tree(t)
        tc = dataset.team_comm(t)
        rows.append((t, {s: TREE_STATS[s](tt) for s in tree_stats},
                     {s: COMM_STATS[s](tc) for s in comm_stats}))
    return rows


def team_stat_correlation(dataset: Dataset, stat_pairs: Sequence[tuple[str, str]]) -> dict:
    """Pearson correlation across teams for each (tree stat, comm stat) pair."""
    if len(dataset.teams.teams) < 3:
        raise ValueError("need at least 3 teams")
    rows = team_stat_table(dataset, [a for a, _ in stat_pairs], [b for _, b in stat_pairs])
    return {
        (a, b): pearson([r[1][a] for r in rows], [r[2][b] for r in rows])
        for a, b in stat_pairs
    }
