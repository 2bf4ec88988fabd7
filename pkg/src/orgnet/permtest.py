"""Permutation test for symmetry of communication about zero distance.

For a signed distance d on ordered pairs, let ``S_k`` be the pairs at
distance k. The statistic is::

    t(A) = sum_{k=1..k_max} (mean A over S_k - mean A over S_-k) ** 2

skipping k where either side is empty. Under the null, email counts are
exchangeable between ``S_k`` and ``S_-k``; replicates shuffle the counts
among all pairs at absolute distance ``|k|``.

Replicate r draws from a Philox stream keyed by ``(seed, r)``, so results do
not depend on how replicates are spread over workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .distance import team_pair_arrays
from .model import CommGraph, Dataset
from .parallel import default_workers  # noqa: F401


@dataclass(frozen=True)
class SymmetryTestResult:
    observed_t: float
    null_samples: np.ndarray
    p_value: float
    n_permutations: int
    distance_kind: str = "SRD"

    def to_dict(self) -> dict:
        return {
            "observed_t": self.observed_t,
            "p_value": self.p_value,
            "n_permutations": self.n_permutations,
            "distance_kind": self.distance_kind,
            "null_mean": float(np.mean(self.null_samples)),
            "null_sd": float(np.std(self.null_samples, ddof=1)) if self.n_permutations > 1 else 0.0,
        }


def t_statistic(dist, weight) -> float:
    """The symmetry statistic on aligned distance and email-count arrays."""
    dist = np.asarray(dist, dtype=np.int64)
    weight = np.asarray(weight, dtype=np.float64)
    if dist.size == 0:
        return 0.0
    kmax = int(np.abs(dist).max())
    if kmax == 0:
        return 0.0
    off = dist + kmax
    cnt = np.bincount(off, minlength=2 * kmax + 1)
    tot = np.bincount(off, weights=weight, minlength=2 * kmax + 1)
    pos_c, neg_c = cnt[kmax + 1:], cnt[kmax - 1::-1]
    pos_s, neg_s = tot[kmax + 1:], tot[kmax - 1::-1]
    ok = (pos_c > 0) & (neg_c > 0)
    diff = pos_s[ok] / pos_c[ok] - neg_s[ok] / neg_c[ok]
    return float(np.sum(diff * diff))


def _as_arrays(comm: CommGraph, distances: Mapping[tuple[str, str], int]):
    keys = sorted(distances)
    d = np.fromiter((distances[k] for k in keys), dtype=np.int64, count=len(keys))
    w = np.fromiter((comm.weight(u, v) for u, v in keys), dtype=np.float64, count=len(keys))
    return d, w


def symmetry_statistic(comm: CommGraph, distances: Mapping[tuple[str, str], int]) -> float:
    """``t(A)`` for ordered pairs with the given signed distances."""
    return t_statistic(*_as_arrays(comm, distances))


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, replicate], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class _Shuffler:
    """Precomputed layout for shuffling counts within |distance| classes."""

    def __init__(self, dist, weight):
        dist = np.asarray(dist, dtype=np.int64)
        self.dist = dist
        self.weight = np.asarray(weight, dtype=np.float64)
        cls = np.abs(dist)
        movable = np.flatnonzero(cls > 0)
        order = np.argsort(cls[movable], kind="stable")
        self.slots = movable[order]
        self.cls_sorted = cls[self.slots]

    def permuted(self, r: int, seed: int) -> np.ndarray:
        """Weights of replicate r: shuffled within each |k| >= 1 class."""
        rng = replicate_rng(seed, r)
        keys = rng.random(self.slots.size)
        perm = np.lexsort((keys, self.cls_sorted))
        w = self.weight.copy()
        w[self.slots] = self.weight[self.slots[perm]]
        return w

    def replicate(self, r: int, seed: int) -> float:
        return t_statistic(self.dist, self.permuted(r, seed))


def symmetry_test_arrays(dist, weight, n_perm: int = 500, seed: int = 0,
                         workers: int | None = None, kind: str = "SRD") -> SymmetryTestResult:
    if n_perm < 1:
        raise ValueError("n_perm must be >= 1")
    shuffler = _Shuffler(dist, weight)
    observed = t_statistic(shuffler.dist, shuffler.weight)
    workers = workers or 1
    if workers == 1:
        null = np.array([shuffler.replicate(r, seed) for r in range(n_perm)])
    else:
        chunks = np.array_split(np.arange(n_perm), workers)
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda c: [shuffler.replicate(int(r), seed) for r in c], chunks))
        null = np.array([x for p in parts for x in p])
    p = (1 + int(np.count_nonzero(null >= observed))) / (1 + n_perm)
    return SymmetryTestResult(observed, null, p, n_perm, kind)


def permutation_symmetry_test(comm: CommGraph, distances: Mapping[tuple[str, str], int],
                              n_perm: int = 500, seed: int = 0,
                              workers: int | None = None, kind: str = "SRD") -> SymmetryTestResult:
    """Permutation p-value for symmetry of ``A`` about zero distance."""
    d, w = _as_arrays(comm, distances)
    return symmetry_test_arrays(d, w, n_perm, seed, workers, kind)


def team_symmetry_test(dataset: Dataset, team: str, kind: str = "SRD", n_perm: int = 500,
                       seed: int = 0, max_team_size: int = 10_000,
                       workers: int | None = None) -> SymmetryTestResult | None:
    """Run the test on one team; ``None`` when the team exceeds the size cutoff."""
    if dataset.teams.size(team) > max_team_size:
        return None
    _, _, d, w = team_pair_arrays(dataset, team, kind)
    return symmetry_test_arrays(d, w, n_perm, seed, workers, kind)
