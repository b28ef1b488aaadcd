"""Paired Wilcoxon signed-rank test.

Exact null distribution for up to 20 non-zero differences, normal
approximation (tie and continuity corrected) beyond that. Zero differences are
discarded before ranking.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

EXACT_MAX_N = 20


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2.0
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


def signed_ranks(a: Sequence[float], b: Sequence[float]) -> tuple[list[float], list[bool]]:
    """Average ranks of |a - b| over the non-zero differences, and which are positive."""
    if len(a) != len(b):
        raise ValueError(f"paired samples differ in length: {len(a)} vs {len(b)}")
    d = [float(x) - float(y) for x, y in zip(a, b)]
    d = [x for x in d if x != 0.0]
    return _average_ranks([abs(x) for x in d]), [x > 0 for x in d]


def _exact_p(ranks: list[float], positive: list[bool]) -> float:
    # doubled ranks are integers even with half-rank ties
    r2 = [int(round(2 * r)) for r in ranks]
    total = sum(r2)
    t_obs = sum(r for r, pos in zip(r2, positive) if pos)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in r2:
        for s in range(total, r - 1, -1):
            counts[s] += counts[s - r]
    dev_obs = abs(2 * t_obs - total)
    extreme = sum(c for s, c in enumerate(counts) if c and abs(2 * s - total) >= dev_obs)
    return extreme / (1 << len(r2))


def _normal_p(ranks: list[float], positive: list[bool]) -> float:
    m = len(ranks)
    t_plus = sum(r for r, pos in zip(ranks, positive) if pos)
    mean = m * (m + 1) / 4.0
    _, tie_sizes = np.unique(np.asarray(ranks), return_counts=True)
    var = m * (m + 1) * (2 * m + 1) / 24.0 - float(np.sum(tie_sizes**3 - tie_sizes)) / 48.0
    if var <= 0:
        return 1.0
    z = max(abs(t_plus - mean) - 0.5, 0.0) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided p-value for the paired samples ``a`` and ``b``."""
    ranks, positive = signed_ranks(a, b)
    if not ranks:
        return 1.0
    if len(ranks) <= EXACT_MAX_N:
        return min(1.0, _exact_p(ranks, positive))
    return _normal_p(ranks, positive)


def significance_marker(p: float | None) -> str:
    if p is None:
        return ""
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""
