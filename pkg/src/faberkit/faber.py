"""Analysis and synthesis in the tensor hierarchical hat basis.

The univariate system on [0,1] consists of the two boundary functions
``1 - x`` (translation 0) and ``x`` (translation 1) at level -1 and, per
level j >= 0, the 2**j interior hats ``v(2**j x - k)`` where v is the
sup-normalized tent (``v(t) = 2t`` on [0, 1/2], ``2 - 2t`` on [1/2, 1],
0 outside).  Tensor products over axes give the d-variate system.

The coefficient of a continuous f at (j, k) is a mixed second difference
at the dyadic node x_{j,k}: along each active axis the weights
(+1, -2, +1) at step 2**-(j_i+1) and a factor -1/2, along each boundary
axis plain point evaluation.  In one variable that is the hierarchical
surplus ``f(mid) - (f(left) + f(right)) / 2``.  Truncating the expansion
at truncation order n yields the sparse-grid interpolant; a
:class:`FaberSeries` stores its data.
"""

from __future__ import annotations

import io
import itertools
import json
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, Mapping

import numpy as np

from .dyadic import (
    MAX_LEVEL,
    DyadicPoint,
    LevelVector,
    _as_level,
    _axis_grid,
    _check_translation,
    coeff_sample_points,
    levels_up_to,
    translations,
)

__all__ = [
    "EvaluationError",
    "FunctionHandle",
    "SampleCache",
    "FaberSeries",
    "hat_eval",
    "tensor_eval",
    "coeff",
    "analyze",
    "synthesize",
    "evaluate",
    "evaluate_batch",
    "integrate",
    "series_to_text",
    "series_from_text",
    "series_to_json",
    "series_from_json",
]


class EvaluationError(ValueError):
    """A function handle produced a non-finite value; carries the point."""

    def __init__(self, label: str, point: tuple[float, ...], value: float):
        self.point = point
        self.value = value
        super().__init__(f"{label!r} returned non-finite value {value!r} at {point}")


def _worker_count() -> int:
    """Worker cap from FABER_THREADS (0 or unset selects a single worker)."""
    raw = os.environ.get("FABER_THREADS", "").strip()
    if not raw:
        return 1
    count = int(raw)
    if count < 0:
        raise ValueError("FABER_THREADS must be >= 0")
    return min(count, 64) if count else 1


class FunctionHandle:
    """Deterministic black box f: [0,1]^d -> R with an evaluation counter.

    Parameters
    ----------
    evaluator : callable
        Maps an (N, dim) float64 array to an (N,) array.  Must be
        deterministic: evaluating the same point twice is bit-identical.
    dim : int
        Domain dimension d.
    label : str
        Free text used in error messages and summaries.
    exact_integral, exact_l2 : float, optional
        Closed-form reference values, when the function ships them.
    """

    __slots__ = ("label", "dim", "exact_integral", "exact_l2", "_evaluator", "_count")

    def __init__(
        self,
        evaluator: Callable[[np.ndarray], np.ndarray],
        dim: int,
        label: str = "f",
        exact_integral: float | None = None,
        exact_l2: float | None = None,
    ):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self._evaluator = evaluator
        self.dim = int(dim)
        self.label = label
        self.exact_integral = exact_integral
        self.exact_l2 = exact_l2
        self._count = 0

    @property
    def eval_count(self) -> int:
        """Total number of point evaluations requested so far."""
        return self._count

    def eval_batch(self, points) -> np.ndarray:
        X = np.ascontiguousarray(points, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ValueError(f"expected (N, {self.dim}) points, got shape {X.shape}")
        self._count += X.shape[0]
        vals = np.asarray(self._evaluator(X), dtype=np.float64)
        if vals.shape != (X.shape[0],):
            raise ValueError(f"evaluator of {self.label!r} returned shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            bad = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise EvaluationError(self.label, tuple(X[bad]), float(vals[bad]))
        return vals

    def __call__(self, x) -> float:
        X = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return float(self.eval_batch(X)[0])

    @classmethod
    def from_scalar(cls, func: Callable[..., float], dim: int, **kwargs) -> "FunctionHandle":
        """Wrap a scalar callable f(x_1, ..., x_d) -> float."""

        def evaluator(X: np.ndarray) -> np.ndarray:
            return np.array([func(*row) for row in X], dtype=np.float64)

        return cls(evaluator, dim, **kwargs)

    def __repr__(self) -> str:
        return f"FunctionHandle({self.label!r}, dim={self.dim}, evals={self._count})"


class SampleCache:
    """Map from canonical dyadic points to sampled values.

    Insertion is insert-if-absent under a lock: concurrent writers may
    race to evaluate, but every reader observes exactly one stored value
    per point (first insert wins).  :func:`analyze` populates the cache
    in a single deduplicated batch, so its evaluation count is exact.
    """

    def __init__(self) -> None:
        self._values: dict[DyadicPoint, float] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._values)

    def __contains__(self, point: DyadicPoint) -> bool:
        return point in self._values

    def value(self, point: DyadicPoint) -> float:
        return self._values[point]

    def ensure(self, f: FunctionHandle, points) -> None:
        """Evaluate and store every point not yet cached (one batch)."""
        missing = [p for p in dict.fromkeys(points) if p not in self._values]
        if not missing:
            return
        X = np.array([p.as_floats() for p in missing], dtype=np.float64)
        vals = f.eval_batch(X)
        with self._lock:
            for p, v in zip(missing, vals):
                self._values.setdefault(p, float(v))


def hat_eval(j: int, k: int, x: float) -> float:
    """Evaluate the univariate basis function (j, k) at x in [0,1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0,1]")
    if j == -1:
        if k not in (0, 1):
            raise ValueError(f"translation {k} out of range for level -1")
        return 1.0 - x if k == 0 else x
    if j < -1 or j > MAX_LEVEL:
        raise ValueError(f"level {j} out of range")
    if not 0 <= k < (1 << j):
        raise ValueError(f"translation {k} out of range for level {j}")
    t = math.ldexp(x, j) - k
    if t <= 0.0 or t >= 1.0:
        return 0.0
    return 1.0 - abs(2.0 * t - 1.0)


def tensor_eval(j, k, x) -> float:
    """Product of per-axis basis values; exactly 0 outside the support box."""
    j = _as_level(j)
    k = tuple(int(v) for v in k)
    _check_translation(j, k)
    if len(x) != j.dim:
        raise ValueError("point dimension mismatch")
    out = 1.0
    for e, ki, xi in zip(j.entries, k, x):
        out *= hat_eval(e, ki, xi)
        if out == 0.0:
            return 0.0
    return out


def _surplus_contract(vals: np.ndarray) -> np.ndarray:
    """Apply ``-(V[2m] - 2 V[2m+1] + V[2m+2]) / 2`` along every odd axis.

    Axes of length <= 2 (boundary pairs, inactive axes) pass through
    unchanged.  Feeding the full per-level sample grid turns nodal values
    into the level's hierarchical surpluses in one sweep.
    """
    for axis in range(vals.ndim):
        size = vals.shape[axis]
        if size < 3:
            continue
        head = [slice(None)] * vals.ndim
        mid = [slice(None)] * vals.ndim
        tail = [slice(None)] * vals.ndim
        head[axis] = slice(0, size - 2, 2)
        mid[axis] = slice(1, size, 2)
        tail[axis] = slice(2, size, 2)
        vals = -0.5 * (vals[tuple(head)] - 2.0 * vals[tuple(mid)] + vals[tuple(tail)])
    return vals


def coeff(f: FunctionHandle, j, k, cache: SampleCache | None = None) -> float:
    """Hierarchical coefficient of f at (j, k).

    Samples the 3**(#active) stencil points (through the cache, at most
    once per point) and contracts with the surplus weights.
    """
    j = _as_level(j)
    pts = coeff_sample_points(j, k)
    if cache is None:
        cache = SampleCache()
    cache.ensure(f, pts)
    shape = tuple(3 if e >= 0 else 1 for e in j.entries)
    vals = np.array([cache.value(p) for p in pts], dtype=np.float64).reshape(shape)
    return float(_surplus_contract(vals)[(0,) * j.dim])


class FaberSeries:
    """Coefficients of a truncated expansion: one dense array per level.

    Exactly the levels of truncation order <= budget are stored; the flat
    array of level j is indexed in the lexicographic translation order.
    Instances are immutable after construction and safe to share.
    """

    __slots__ = ("budget", "dim", "_data", "_levels")

    def __init__(self, budget: int, dim: int, data: Mapping[LevelVector, np.ndarray]):
        levels = levels_up_to(budget, dim)
        expected = set(levels)
        got = {_as_level(j) for j in data}
        if got != expected:
            missing = sorted(l.entries for l in expected - got)
            extra = sorted(l.entries for l in got - expected)
            raise ValueError(f"level set mismatch: missing {missing}, extra {extra}")
        store: dict[LevelVector, np.ndarray] = {}
        for j, arr in data.items():
            j = _as_level(j)
            flat = np.array(arr, dtype=np.float64).reshape(-1)
            if flat.size != j.translation_count():
                raise ValueError(
                    f"level {j.entries} expects {j.translation_count()} "
                    f"coefficients, got {flat.size}"
                )
            if not np.all(np.isfinite(flat)):
                raise ValueError(f"non-finite coefficient at level {j.entries}")
            flat.setflags(write=False)
            store[j] = flat
        object.__setattr__(self, "budget", int(budget))
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "_data", store)
        object.__setattr__(self, "_levels", tuple(levels))

    @classmethod
    def zeros(cls, budget: int, dim: int) -> "FaberSeries":
        return cls(
            budget,
            dim,
            {j: np.zeros(j.translation_count()) for j in levels_up_to(budget, dim)},
        )

    def __setattr__(self, name, value):
        raise AttributeError("FaberSeries is immutable")

    def levels(self) -> tuple[LevelVector, ...]:
        return self._levels

    def items(self) -> Iterator[tuple[LevelVector, np.ndarray]]:
        for j in self._levels:
            yield j, self._data[j]

    def array(self, j) -> np.ndarray:
        """Read-only flat coefficient array of level j (translation order)."""
        j = _as_level(j)
        try:
            return self._data[j]
        except KeyError:
            raise ValueError(f"level {j.entries} not stored (budget {self.budget})")

    def get(self, j, k) -> float:
        j = _as_level(j)
        k = tuple(int(v) for v in k)
        _check_translation(j, k)
        flat = 0
        for ki, c in zip(k, j.translation_shape()):
            flat = flat * c + ki
        return float(self.array(j)[flat])

    @property
    def size(self) -> int:
        return sum(a.size for a in self._data.values())

    def max_abs_diff(self, other: "FaberSeries") -> float:
        if (self.budget, self.dim) != (other.budget, other.dim):
            raise ValueError("series shapes differ")
        return max(
            float(np.max(np.abs(self._data[j] - other._data[j]), initial=0.0))
            for j in self._levels
        )

    def scaled(self, alpha: float) -> "FaberSeries":
        return FaberSeries(
            self.budget, self.dim, {j: alpha * a for j, a in self.items()}
        )

    def plus(self, other: "FaberSeries") -> "FaberSeries":
        if (self.budget, self.dim) != (other.budget, other.dim):
            raise ValueError("series shapes differ")
        return FaberSeries(
            self.budget, self.dim, {j: a + other._data[j] for j, a in self.items()}
        )

    def __repr__(self) -> str:
        return f"FaberSeries(budget={self.budget}, dim={self.dim}, size={self.size})"


def analyze(
    f: FunctionHandle,
    n: int,
    d: int | None = None,
    cache: SampleCache | None = None,
) -> FaberSeries:
    """Compute every coefficient of truncation order <= n from samples of f.

    The sample set is deduplicated up front, so a fresh handle is
    evaluated at exactly the node-set size m(n, d) distinct points.  The
    per-level surplus contractions are independent; FABER_THREADS > 1
    distributes them over a thread pool without changing any result.
    """
    if d is None:
        d = f.dim
    elif d != f.dim:
        raise ValueError(f"requested d={d} but handle has dim={f.dim}")
    if n < 0:
        raise ValueError("budget must be >= 0")

    levels = levels_up_to(n, d)
    if cache is None:
        cache = SampleCache()

    # Pass 1: per level, indices of its sample grid into a deduplicated
    # point list (first-seen order, deterministic).
    index_of: dict[DyadicPoint, int] = {}
    points: list[DyadicPoint] = []
    plans: list[tuple[LevelVector, tuple[int, ...], np.ndarray]] = []
    for j in levels:
        axes = [_axis_grid(e) for e in j.entries]
        shape = tuple(len(a) for a in axes)
        idx = np.empty(math.prod(shape), dtype=np.int64)
        pos = 0
        for combo in itertools.product(*axes):
            p = DyadicPoint._from_canonical(combo)
            i = index_of.get(p)
            if i is None:
                i = len(points)
                index_of[p] = i
                points.append(p)
            idx[pos] = i
            pos += 1
        plans.append((j, shape, idx))

    cache.ensure(f, points)
    values = np.array([cache.value(p) for p in points], dtype=np.float64)

    def build(plan) -> tuple[LevelVector, np.ndarray]:
        j, shape, idx = plan
        grid = values[idx].reshape(shape)
        return j, np.ascontiguousarray(_surplus_contract(grid)).reshape(-1)

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(build, plans))
    else:
        results = [build(plan) for plan in plans]
    return FaberSeries(n, d, dict(results))


def evaluate_batch(series: FaberSeries, points) -> np.ndarray:
    """Evaluate the truncated expansion at an (N, d) batch of points.

    Uses support locality: per level and point only the covering cell
    contributes per active axis (left-closed cell convention; values at
    cell interfaces agree by continuity) and both boundary functions
    contribute on level -1 axes.
    """
    X = np.ascontiguousarray(points, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != series.dim:
        raise ValueError(f"expected (N, {series.dim}) points, got {X.shape}")
    if X.size and (X.min() < 0.0 or X.max() > 1.0):
        raise ValueError("point outside [0,1]^d")
    out = np.zeros(X.shape[0])
    for j, arr in series.items():
        if not arr.any():
            continue
        shape = j.translation_shape()
        choices: list[list[tuple[object, object]]] = []
        for axis, e in enumerate(j.entries):
            xi = X[:, axis]
            if e >= 0:
                t = np.ldexp(xi, e)
                k = np.minimum(np.floor(t).astype(np.int64), (1 << e) - 1)
                tent = 1.0 - np.abs(2.0 * (t - k) - 1.0)
                choices.append([(k, tent)])
            else:
                choices.append([(0, 1.0 - xi), (1, xi)])
        for combo in itertools.product(*choices):
            idx: object = 0
            val: object = 1.0
            for (ki, vi), c in zip(combo, shape):
                idx = idx * c + ki
                val = val * vi
            out += arr[idx] * val
    return out


def evaluate(series: FaberSeries, x) -> float:
    """Pointwise value of the truncated expansion at x in [0,1]^d."""
    X = np.asarray(x, dtype=np.float64).reshape(1, -1)
    return float(evaluate_batch(series, X)[0])


def synthesize(series: FaberSeries, label: str | None = None) -> FunctionHandle:
    """Wrap a coefficient series as an exactly evaluable function handle.

    The handle evaluates the finite expansion via support locality and
    ships its exact integral, so synthesized series double as test
    functions with known answers.
    """
    if label is None:
        label = f"series[d={series.dim},n={series.budget}]"
    return FunctionHandle(
        lambda X: evaluate_batch(series, X),
        series.dim,
        label=label,
        exact_integral=integrate(series),
    )


def integrate(series: FaberSeries) -> float:
    """Exact integral over [0,1]^d of the truncated expansion.

    Per axis a hat of level j has integral 2**-(j+1) and each boundary
    function has integral 1/2; the weight of level j is the product.
    """
    terms = []
    for j, arr in series.items():
        w = 1.0
        for e in j.entries:
            w *= 0.5 if e == -1 else math.ldexp(1.0, -e - 1)
        terms.append(w * float(np.sum(arr)))
    return math.fsum(terms)


# -- serialization -----------------------------------------------------------
#
# Text format: header "dim <d> budget <n>", then one line per coefficient
# "j_1 .. j_d k_1 .. k_d value" in level/translation order, values printed
# as shortest round-trip decimals.  The JSON variant mirrors the fields.


def series_to_text(series: FaberSeries) -> str:
    buf = io.StringIO()
    buf.write(f"dim {series.dim} budget {series.budget}\n")
    for j, arr in series.items():
        js = " ".join(str(e) for e in j.entries)
        for flat, k in enumerate(translations(j)):
            ks = " ".join(str(v) for v in k)
            buf.write(f"{js} {ks} {float(arr[flat])!r}\n")
    return buf.getvalue()


def series_from_text(text: str) -> FaberSeries:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty series text")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "dim" or head[2] != "budget":
        raise ValueError(f"bad header {lines[0]!r}")
    d, n = int(head[1]), int(head[3])
    data = {
        j: np.zeros(j.translation_count(), dtype=np.float64)
        for j in levels_up_to(n, d)
    }
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2 * d + 1:
            raise ValueError(f"bad coefficient line {ln!r}")
        j = LevelVector(tuple(int(v) for v in parts[:d]))
        k = tuple(int(v) for v in parts[d : 2 * d])
        _check_translation(j, k)
        flat = 0
        for ki, c in zip(k, j.translation_shape()):
            flat = flat * c + ki
        if j not in data:
            raise ValueError(f"level {j.entries} outside budget {n}")
        data[j][flat] = float(parts[2 * d])
    return FaberSeries(n, d, data)


def series_to_json(series: FaberSeries) -> str:
    entries = []
    for j, arr in series.items():
        for flat, k in enumerate(translations(j)):
            entries.append(
                {"j": list(j.entries), "k": list(k), "value": float(arr[flat])}
            )
    doc = {"dim": series.dim, "budget": series.budget, "entries": entries}
    return json.dumps(doc, separators=(",", ":"))


def series_from_json(text: str) -> FaberSeries:
    doc = json.loads(text)
    d, n = int(doc["dim"]), int(doc["budget"])
    data = {
        j: np.zeros(j.translation_count(), dtype=np.float64)
        for j in levels_up_to(n, d)
    }
    for entry in doc["entries"]:
        j = LevelVector(tuple(int(v) for v in entry["j"]))
        k = tuple(int(v) for v in entry["k"])
        _check_translation(j, k)
        if j not in data:
            raise ValueError(f"level {j.entries} outside budget {n}")
        flat = 0
        for ki, c in zip(k, j.translation_shape()):
            flat = flat * c + ki
        data[j][flat] = float(entry["value"])
    return FaberSeries(n, d, data)
