"""Nonparametric group-difference testing for sampled gain distributions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.stats


class DegenerateDataError(ValueError):
    """Every observation is identical; the rank test is undefined."""


@dataclass(frozen=True)
class KruskalResult:
    """Kruskal-Wallis test outcome against the chi-square reference."""

    H: float
    df: int
    p_value: float

    @property
    def p_label(self) -> str:
        """Printable p-value; underflowed values are floored, not zeroed."""
        return "<1e-300" if self.p_value < 1e-300 else repr(self.p_value)


def kruskal_wallis(groups) -> KruskalResult:
    """Rank-based k-group test for equal distributions.

    Observations are ranked jointly with mid-ranks for ties; the statistic
    H = (12/(n(n+1))) * sum n_i (rbar_i - rbar)^2 is divided by the tie
    correction 1 - sum(t^3 - t)/(n^3 - n) and referred to the chi-square
    upper tail with df = groups - 1.
    """
    groups = [np.asarray(g, dtype=float).ravel() for g in groups]
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    if any(g.size == 0 for g in groups):
        raise ValueError("every group must be nonempty")
    pooled = np.concatenate(groups)
    n = pooled.size
    if n < 3:
        raise ValueError("need at least three observations in total")
    if np.all(pooled == pooled[0]):
        raise DegenerateDataError("all observations identical; tie correction is zero")
    ranks = scipy.stats.rankdata(pooled)  # mid-ranks for ties
    rbar = (n + 1) / 2.0
    h = 0.0
    start = 0
    for g in groups:
        r = ranks[start : start + g.size]
        start += g.size
        h += g.size * (r.mean() - rbar) ** 2
    h *= 12.0 / (n * (n + 1))
    _, counts = np.unique(pooled, return_counts=True)
    tie = 1.0 - float(((counts**3 - counts).sum()) / (n**3 - n))
    h /= tie
    df = len(groups) - 1
    p = float(scipy.stats.chi2.sf(h, df))
    return KruskalResult(H=float(h), df=df, p_value=p)


def groups_from_records(records, value_key: str, group_key: str):
    """Split tabular records into value lists keyed by a group column.

    Accepts the explorer's CSV record dicts (or any iterable of mappings);
    group order follows first appearance.
    """
    out: dict = {}
    for rec in records:
        out.setdefault(rec[group_key], []).append(float(rec[value_key]))
    return out
