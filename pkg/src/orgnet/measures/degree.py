"""Degree and strength, plus a discrete power-law fit for degree tails."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import zeta

from ..errors import DegenerateSample
from ..model import CommGraph


class DegreeRecord(NamedTuple):
    in_degree: int
    out_degree: int
    total_degree: int
    in_strength: int
    out_strength: int
    total_strength: int


def degree_arrays(comm: CommGraph) -> dict[str, np.ndarray]:
    """Per-node degree/strength arrays aligned with ``comm.ids``."""
    n = comm.n_nodes
    src, dst, w = comm.src, comm.dst, comm.w
    out_deg = np.bincount(src, minlength=n)
    in_deg = np.bincount(dst, minlength=n)
    out_str = np.bincount(src, weights=w, minlength=n).astype(np.int64)
    in_str = np.bincount(dst, weights=w, minlength=n).astype(np.int64)
    if len(src):
        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        pairs = np.unique(lo * n + hi)
        tot_deg = np.bincount(pairs // n, minlength=n) + np.bincount(pairs % n, minlength=n)
    else:
        tot_deg = np.zeros(n, dtype=np.int64)
    return {
        "in_degree": in_deg,
        "out_degree": out_deg,
        "total_degree": tot_deg,
        "in_strength": in_str,
        "out_strength": out_str,
        "total_strength": in_str + out_str,
    }


def degree_strength(comm: CommGraph) -> dict[str, DegreeRecord]:
    arr = degree_arrays(comm)
    cols = [arr[f].tolist() for f in DegreeRecord._fields]
    return {u: DegreeRecord(*vals) for u, vals in zip(comm.ids, zip(*cols))}


class PowerLawFit(NamedTuple):
    alpha: float
    x_min: int
    ks_statistic: float
    n_tail: int


def _alpha_mle(n, sum_log, xmin):
    def nll(a):
        return n * np.log(zeta(a, xmin)) + a * sum_log
    res = minimize_scalar(nll, bounds=(1.0 + 1e-6, 25.0), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


def fit_power_law(values, min_tail: int = 10) -> PowerLawFit:
    """Discrete power-law fit with the KS-optimal lower cutoff.

    For each candidate ``x_min`` the exponent is the discrete maximum
    likelihood estimate under ``p(x) = x**-alpha / zeta(alpha, x_min)``; the
    cutoff minimising the KS distance between the empirical and fitted tail
    CDFs is kept.
    """
    x = np.asarray(values)
    if x.size < 50:
        raise DegenerateSample(f"need at least 50 values, got {x.size}")
    if np.any(x < 1) or np.any(x != np.round(x)):
        raise DegenerateSample("values must be positive integers")
    x = np.sort(x.astype(np.int64))
    if x[0] == x[-1]:
        raise DegenerateSample("all values are equal")
    uniq, first = np.unique(x, return_index=True)
    logs = np.log(x)
    suffix_log = np.concatenate([np.cumsum(logs[::-1])[::-1], [0.0]])
    n_total = x.size
    best = None
    for xmin, start in zip(uniq.tolist(), first.tolist()):
        n = n_total - start
        if n < min_tail:
            break
        tail_uniq = uniq[uniq >= xmin]
        if tail_uniq.size < 2:
            break
        a = _alpha_mle(n, suffix_log[start], xmin)
        # empirical CDF at each distinct tail value
        counts = np.searchsorted(x, tail_uniq, side="right") - start
        emp = counts / n
        fit = 1.0 - zeta(a, tail_uniq + 1) / zeta(a, xmin)
        emp_prev = np.concatenate([[0.0], emp[:-1]])
        fit_prev = np.concatenate([[0.0], fit[:-1]])
        d = max(np.max(np.abs(emp - fit)), np.max(np.abs(emp_prev - fit_prev)))
        if best is None or d < best.ks_statistic:
            best = PowerLawFit(a, int(xmin), float(d), int(n))
    if best is None:
        raise DegenerateSample("no candidate cutoff leaves enough tail values")
    return best
