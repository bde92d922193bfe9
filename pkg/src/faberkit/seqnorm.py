"""Sequence-space norms over hierarchical coefficients.

The norm with parameters (r, p, q) is the l_q aggregate over levels of
``2**(order(j) * (r - 1/p)) * (sum_k |c_{j,k}|**p)**(1/p)``, with the
supremum for q = inf.  Computed on a truncated series it uses exactly
the stored levels, so reported values are lower bounds of the full norm
and never decrease when the budget grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import _as_level
from .faber import FaberSeries, FunctionHandle, analyze

__all__ = ["NormParams", "level_lp", "seq_norm", "series_profile", "decay_profile"]


@dataclass(frozen=True)
class NormParams:
    """Smoothness r, inner exponent p in [1, inf), outer exponent q in (0, inf]."""

    r: float
    p: float
    q: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.r):
            raise ValueError("r must be finite")
        if not (math.isfinite(self.p) and self.p >= 1.0):
            raise ValueError("p must satisfy 1 <= p < inf")
        if not self.q > 0.0:
            raise ValueError("q must be positive (math.inf allowed)")


def level_lp(series: FaberSeries, j, p: float) -> float:
    """l_p norm of the coefficients of one stored level."""
    if not (math.isfinite(p) and p >= 1.0):
        raise ValueError("p must satisfy 1 <= p < inf")
    arr = np.abs(series.array(_as_level(j)))
    top = float(arr.max(initial=0.0))
    if top == 0.0:
        return 0.0
    # scale by the maximum so large p cannot overflow
    return top * float(np.sum((arr / top) ** p)) ** (1.0 / p)


def seq_norm(series: FaberSeries, params: NormParams) -> float:
    """Weighted l_q-over-levels norm of a truncated series."""
    exponent = params.r - 1.0 / params.p
    terms = [
        2.0 ** (j.order * exponent) * level_lp(series, j, params.p)
        for j in series.levels()
    ]
    if math.isinf(params.q):
        return max(terms, default=0.0)
    top = max(terms, default=0.0)
    if top == 0.0:
        return 0.0
    return top * math.fsum((t / top) ** params.q for t in terms) ** (1.0 / params.q)


def series_profile(series: FaberSeries, p: float) -> list[tuple[int, float]]:
    """Per truncation order, the maximum level_lp over levels of that order."""
    best: dict[int, float] = {}
    for j in series.levels():
        value = level_lp(series, j, p)
        order = j.order
        if value > best.get(order, 0.0):
            best[order] = value
    return [(order, best.get(order, 0.0)) for order in range(series.budget + 1)]


def decay_profile(
    f: FunctionHandle, p: float, n: int, d: int | None = None
) -> list[tuple[int, float]]:
    """Empirical coefficient-decay profile of f up to truncation order n.

    A flat-or-decaying profile is the observable signature of the
    level-wise coefficient bound; the probe is one-sided (boundedness),
    the converse direction is not measurable from finitely many levels.
    """
    if n < 2:
        raise ValueError("profile needs budget n >= 2")
    return series_profile(analyze(f, n, d), p)
