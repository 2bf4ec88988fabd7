"""Per-team evaluation of every reconstruction method against the true tree."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import Disconnected
from ..model import Dataset
from ..parallel import pmap
from .methods import agony_ranking, distance_hierarchy, orient_from_root, spanning_tree
from .metrics import level_mse, manager_classification, tree_centrality_distance, tree_frobenius

log = logging.getLogger(__name__)

METHODS = ("minst", "maxst", "agony", "distance")
RECORD_HEADER = ["team", "method", "n", "frobenius", "centrality", "classification",
                 "rel_frobenius", "rel_centrality", "rel_classification"]
LEVEL_HEADER = ["team", "method", "k", "mse"]


@dataclass
class EvaluationRecord:
    team: str
    method: str
    n: int
    frobenius: float
    centrality: float
    classification: float
    level_mse: dict = field(default_factory=dict)
    relative_to_minst: dict | None = None

    def row(self) -> list:
        rel = self.relative_to_minst or {}
        return [self.team, self.method, self.n, self.frobenius, self.centrality,
                self.classification, rel.get("frobenius"), rel.get("centrality"),
                rel.get("classification")]


def run_method(comm, method: str, decay: float = 1.0):
    if method == "minst":
        return spanning_tree(comm, "min")
    if method == "maxst":
        return spanning_tree(comm, "max")
    if method == "agony":
        return agony_ranking(comm)
    if method == "distance":
        return distance_hierarchy(comm, decay)
    raise ValueError(f"unknown method {method!r}")


def evaluate_team(dataset: Dataset, team: str, methods=METHODS, decay: float = 1.0):
    truth = dataset.team_tree(team)
    comm = dataset.team_comm(team)
    out = []
    for m in methods:
        try:
            est = run_method(comm, m, decay)
        except Disconnected as exc:
            log.warning("team %s, method %s: %s", team, m, exc)
            nan = float("nan")
            out.append(EvaluationRecord(team, m, len(truth), nan, nan, nan))
            continue
        lm = {}
        if est.kind == "tree":
            est = orient_from_root(est, truth.root)
            lm = level_mse(truth, est)
        out.append(EvaluationRecord(
            team, m, len(truth),
            tree_frobenius(truth, est),
            tree_centrality_distance(truth, est),
            manager_classification(truth, est),
            lm,
        ))
    return out


def evaluate_all(dataset: Dataset, methods=METHODS, size_cap: int = 3000,
                 decay: float = 1.0, workers: int = 1) -> list[EvaluationRecord]:
    """Evaluate every team no larger than ``size_cap``.

    When Min ST is among the methods, each record also carries its scores
    minus the across-team median Min ST score.
    """
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    teams = [t for t in dataset.teams.teams if dataset.teams.size(t) <= size_cap]
    if not teams:
        log.warning("no team has at most %d members; nothing to evaluate", size_cap)
        return []
    parts = pmap(lambda t: evaluate_team(dataset, t, methods, decay), teams, workers)
    records = [r for p in parts for r in p]
    if "minst" in methods:
        base = {}
        for key in ("frobenius", "centrality", "classification"):
            vals = [getattr(r, key) for r in records if r.method == "minst"]
            base[key] = float(np.nanmedian(vals)) if not np.all(np.isnan(vals)) else float("nan")
        for r in records:
            r.relative_to_minst = {k: getattr(r, k) - base[k] for k in base}
    return records


def summarize(records, key: str = "frobenius") -> dict[str, float]:
    """Median of ``key`` per method, ignoring failed runs."""
    out = {}
    for m in dict.fromkeys(r.method for r in records):
        vals = np.array([getattr(r, key) for r in records if r.method == m], dtype=float)
        vals = vals[~np.isnan(vals)]
        out[m] = float(np.median(vals)) if vals.size else float("nan")
    return out


def record_rows(records) -> list[list]:
    return [r.row() for r in records]


def level_rows(records) -> list[list]:
    return [[r.team, r.method, k, v] for r in records for k, v in sorted(r.level_mse.items())]
