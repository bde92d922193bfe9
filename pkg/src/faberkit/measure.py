"""L_q norms of functions on [0,1]^d, with error estimates.

Three methods:

* composite Gauss (d <= 3): a tensor Gauss-Legendre rule of fixed order
  per cell of the uniform dyadic mesh of a given level per axis.  The
  reported error estimate is the difference against the rule one mesh
  level finer; it is a heuristic dominated by the |.|^q kinks at sign
  changes of the integrand inside cells.
* stratified Monte Carlo: one uniform draw per cell of the dyadic mesh
  of level floor(log2(N)/d) plus uniform remainder samples; the
  uncertainty is the standard error propagated through the q-th root.
* sup over the full grid of a given level (the only q = inf method);
  this is a lower bound of the true sup and reported with estimate 0.

Evaluations are chunked at a fixed size and partial sums combined with
exact accumulation, so results do not depend on chunk or thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .dyadic import _as_level
from .faber import FaberSeries, FunctionHandle, evaluate_batch

__all__ = [
    "CompositeGauss",
    "StratifiedMC",
    "SupGrid",
    "MeasureSpec",
    "lq_norm",
    "lq_error",
    "block_lq_exact",
    "default_spec",
    "DEFAULT_GAUSS_ORDER",
    "DEFAULT_MC_SAMPLES",
]

DEFAULT_GAUSS_ORDER = 5
DEFAULT_MC_SAMPLES = 200_000

#: Evaluation-point budget of one composite/sup pass (both mesh levels of
#: the Richardson pair must fit).
_MAX_GRID_POINTS = 1 << 25

_CHUNK = 1 << 16


@dataclass(frozen=True)
class CompositeGauss:
    level: int
    order: int = DEFAULT_GAUSS_ORDER

    def __post_init__(self) -> None:
        if self.order < 2:
            raise ValueError("Gauss order must be >= 2")
        if self.level < 1:
            raise ValueError("mesh level must be >= 1")


@dataclass(frozen=True)
class StratifiedMC:
    samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0

    def __post_init__(self) -> None:
        if self.samples < 1000:
            raise ValueError("need at least 10^3 samples")


@dataclass(frozen=True)
class SupGrid:
    level: int

    def __post_init__(self) -> None:
        if self.level < 1:
            raise ValueError("grid level must be >= 1")


Method = Union[CompositeGauss, StratifiedMC, SupGrid]


@dataclass(frozen=True)
class MeasureSpec:
    """Norm exponent q (math.inf allowed) plus the evaluation method."""

    q: float
    method: Method

    def __post_init__(self) -> None:
        if self.q < 1.0:
            raise ValueError("q < 1 not supported")
        if math.isinf(self.q) and not isinstance(self.method, SupGrid):
            raise ValueError("q = inf is handled by the sup_grid method only")
        if not math.isinf(self.q) and isinstance(self.method, SupGrid):
            raise ValueError("sup_grid measures q = inf only")


def default_spec(q: float, n: int, d: int, seed: int = 0) -> MeasureSpec:
    """Default measurement for budget n in dimension d.

    Composite Gauss on the mesh of level n + 2 where the cell count is
    affordable (it resolves every crease of the truncated interpolant up
    to the |.|^q kinks), stratified Monte Carlo otherwise.
    """
    if math.isinf(q):
        return MeasureSpec(q, SupGrid(level=max(n + 2, 1)))
    level = max(n + 2, 1)
    pts = ((1 << level) * DEFAULT_GAUSS_ORDER) ** d * (1 + 2**d)
    if d <= 3 and pts <= _MAX_GRID_POINTS:
        return MeasureSpec(q, CompositeGauss(level=level))
    return MeasureSpec(q, StratifiedMC(samples=DEFAULT_MC_SAMPLES, seed=seed))


def _tensor_reduce(axis_pts, axis_wts, g: FunctionHandle, q: float) -> float:
    """Sum of w * |g|^q over the tensor grid, chunked deterministically."""
    d = len(axis_pts)
    shape = tuple(len(a) for a in axis_pts)
    total = math.prod(shape)
    partials = []
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        flat = np.arange(start, stop, dtype=np.int64)
        multi = np.unravel_index(flat, shape)
        X = np.empty((stop - start, d))
        w = np.ones(stop - start)
        for i in range(d):
            X[:, i] = axis_pts[i][multi[i]]
            w *= axis_wts[i][multi[i]]
        vals = g.eval_batch(X)
        partials.append(float(np.sum(w * np.abs(vals) ** q)))
    return math.fsum(partials)


def _composite_value(g: FunctionHandle, q: float, order: int, level: int) -> float:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    d = g.dim
    cells = 1 << level
    h = math.ldexp(1.0, -level)
    starts = np.arange(cells, dtype=np.float64) * h
    pts = (starts[:, None] + (nodes[None, :] + 1.0) * (h / 2.0)).reshape(-1)
    wts = np.tile(weights * (h / 2.0), cells)
    total = _tensor_reduce([pts] * d, [wts] * d, g, q)
    return max(total, 0.0) ** (1.0 / q)


def _composite(g: FunctionHandle, q: float, m: CompositeGauss) -> tuple[float, float]:
    d = g.dim
    if d > 3:
        raise ValueError("composite Gauss supports d <= 3; use stratified_mc")
    finer = ((1 << (m.level + 1)) * m.order) ** d
    if finer + ((1 << m.level) * m.order) ** d > _MAX_GRID_POINTS:
        raise ValueError(
            f"composite mesh level {m.level} in d={d} exceeds the cell budget; "
            "use stratified_mc instead"
        )
    value = _composite_value(g, q, m.order, m.level)
    refined = _composite_value(g, q, m.order, m.level + 1)
    return value, abs(value - refined)


def _stratified(g: FunctionHandle, q: float, m: StratifiedMC) -> tuple[float, float]:
    d = g.dim
    n_total = m.samples
    level = int(math.log2(n_total)) // d
    strata = 1 << (level * d)
    rng = np.random.default_rng(m.seed)

    sums = []
    sqsums = []

    def accumulate(X: np.ndarray) -> None:
        vals = np.abs(g.eval_batch(X)) ** q
        sums.append(float(np.sum(vals)))
        sqsums.append(float(np.sum(vals * vals)))

    side = 1 << level
    cell_shape = (side,) * d
    h = math.ldexp(1.0, -level)
    for start in range(0, strata, _CHUNK):
        stop = min(start + _CHUNK, strata)
        offsets = rng.random((stop - start, d))
        corners = np.stack(
            np.unravel_index(np.arange(start, stop, dtype=np.int64), cell_shape),
            axis=1,
        ).astype(np.float64)
        accumulate((corners + offsets) * h)
    remainder = n_total - strata
    for start in range(0, remainder, _CHUNK):
        stop = min(start + _CHUNK, remainder)
        accumulate(rng.random((stop - start, d)))

    mean = math.fsum(sums) / n_total
    var = max(math.fsum(sqsums) / n_total - mean * mean, 0.0)
    se = math.sqrt(var / n_total)
    if mean <= 0.0:
        return 0.0, se ** (1.0 / q)
    value = mean ** (1.0 / q)
    return value, se * value / (q * mean)


def _sup_grid(g: FunctionHandle, m: SupGrid) -> tuple[float, float]:
    d = g.dim
    side = (1 << m.level) + 1
    if side**d > _MAX_GRID_POINTS:
        raise ValueError(f"sup grid level {m.level} in d={d} exceeds the cell budget")
    axis = np.ldexp(np.arange(side, dtype=np.float64), -m.level)
    best = 0.0
    shape = (side,) * d
    total = side**d
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        multi = np.unravel_index(np.arange(start, stop, dtype=np.int64), shape)
        X = np.empty((stop - start, d))
        for i in range(d):
            X[:, i] = axis[multi[i]]
        best = max(best, float(np.max(np.abs(g.eval_batch(X)))))
    return best, 0.0


def lq_norm(g: FunctionHandle, spec: MeasureSpec) -> tuple[float, float]:
    """Norm of g on [0,1]^d per the spec; returns (value, error_estimate)."""
    m = spec.method
    if isinstance(m, CompositeGauss):
        return _composite(g, spec.q, m)
    if isinstance(m, StratifiedMC):
        return _stratified(g, spec.q, m)
    if isinstance(m, SupGrid):
        return _sup_grid(g, m)
    raise TypeError(f"unknown method {m!r}")


def lq_error(
    f: FunctionHandle, series: FaberSeries, spec: MeasureSpec
) -> tuple[float, float]:
    """Norm of the recovery defect f - (truncated expansion)."""
    if f.dim != series.dim:
        raise ValueError("dimension mismatch between handle and series")
    defect = FunctionHandle(
        lambda X: f.eval_batch(X) - evaluate_batch(series, X),
        f.dim,
        label=f"{f.label}-defect(n={series.budget})",
    )
    return lq_norm(defect, spec)


def block_lq_exact(j, coeffs, q: float) -> float:
    """Exact L_q norm of a single interior level, by disjoint supports.

    Valid only when all level entries are >= 0: the hats of one interior
    level have disjoint interiors and each contributes
    |c|^q * 2**-order / (q+1)**d.
    """
    j = _as_level(j)
    if any(e < 0 for e in j.entries):
        raise ValueError("block norm needs all level entries >= 0 (disjoint supports)")
    c = np.asarray(coeffs, dtype=np.float64).reshape(-1)
    if c.size != j.translation_count():
        raise ValueError("coefficient count does not match the level")
    if math.isinf(q):
        return float(np.max(np.abs(c), initial=0.0))
    if q < 1.0:
        raise ValueError("q < 1 not supported")
    mass = float(np.sum(np.abs(c) ** q))
    scale = math.ldexp(1.0, -j.order) / (q + 1.0) ** j.dim
    return (mass * scale) ** (1.0 / q)
