"""Symbolic proper convex functions on R^n.

Functions are small immutable ASTs: primitives with closed-form conjugates
and domains, plus the sum, positive scaling and separable combinators.
All evaluation is vectorized over (N, n) point arrays and returns extended
reals (+inf outside the domain, never -inf).
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from src.errors import DimensionMismatch, NotConvex, SchemaError, UnsupportedDomainShape
from src.numerics import (
    DEFAULT_TOLERANCES,
    INF,
    Grid,
    Tolerances,
    XInterval,
    as_points,
    ext_add_arrays,
    grid_from_json,
    legendre_1d,
    lower_hull,
)
from src.sets import (
    Box,
    ConvexSetDesc,
    Epigraph,
    FullSpace,
    Interval,
    Product,
    chebyshev_radius,
    has_exact_support,
    intersect_sets,
    set_from_json,
)

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

# singleton conjugate domains (affine slopes, flat quadratic axes) are matched to this
SLOPE_ATOL = 1e-9

# jump factor of the lower semicontinuity screen
LSC_GROWTH = 4.0


def _vec(values) -> Tuple[float, ...]:
    return tuple(float(v) for v in np.ravel(values))


class ConvexFn:
    """Base class of the function vocabulary."""

    dim: int

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def domain(self) -> ConvexSetDesc:
        raise NotImplementedError

    def conjugate_values(self, S: np.ndarray) -> Optional[np.ndarray]:
        """Closed-form conjugate at the rows of S, or None when there is none."""
        return None

    @property
    def has_closed_conjugate(self) -> bool:
        origin = np.zeros((1, self.dim))
        return self.conjugate_values(origin) is not None

    def to_json(self) -> Dict[str, Any]:
        raise NotImplementedError

    def __call__(self, x):
        return evaluate(self, x)


@dataclass(frozen=True, eq=False)
class Affine(ConvexFn):
    """x -> <a, x> + b."""
    a: Tuple[float, ...]
    b: float = 0.0

    @property
    def dim(self):
        return len(self.a)

    def evaluate(self, X):
        return X @ np.asarray(self.a, dtype=float) + self.b

    def domain(self):
        return FullSpace(self.dim)

    def conjugate_values(self, S):
        hit = np.all(np.abs(S - np.asarray(self.a, dtype=float)) <= SLOPE_ATOL, axis=1)
        return np.where(hit, -self.b, INF)

    def to_json(self):
        return {"type": "affine", "a": list(self.a), "b": self.b}


@dataclass(frozen=True, eq=False)
class QuadDiag(ConvexFn):
    """x -> sum_i q_i (x_i - shift_i)^2 with q_i >= 0."""
    q: Tuple[float, ...]
    shift: Tuple[float, ...] = ()

    def __post_init__(self):
        if not self.shift:
            object.__setattr__(self, "shift", tuple(0.0 for _ in self.q))
        if len(self.shift) != len(self.q):
            raise DimensionMismatch(len(self.q), len(self.shift), what="shift")
        if any(v < 0 for v in self.q):
            raise ValueError("QuadDiag needs nonnegative coefficients")

    @property
    def dim(self):
        return len(self.q)

    def evaluate(self, X):
        q, s = np.asarray(self.q, dtype=float), np.asarray(self.shift, dtype=float)
        return ((X - s) ** 2) @ q

    def domain(self):
        return FullSpace(self.dim)

    def conjugate_values(self, S):
        q, s = np.asarray(self.q, dtype=float), np.asarray(self.shift, dtype=float)
        curved = q > 0
        total = S @ s
        if curved.any():
            total = total + (S[:, curved] ** 2 / (4.0 * q[curved])).sum(axis=1)
        if (~curved).any():
            flat_ok = np.all(np.abs(S[:, ~curved]) <= SLOPE_ATOL, axis=1)
            total = np.where(flat_ok, total, INF)
        return total

    def to_json(self):
        return {"type": "quad", "q": list(self.q), "shift": list(self.shift)}


@dataclass(frozen=True, eq=False)
class AbsNorm(ConvexFn):
    """x -> sum_i w_i |x_i| with w_i > 0."""
    weights: Tuple[float, ...]

    def __post_init__(self):
        if any(w <= 0 for w in self.weights):
            raise ValueError("AbsNorm weights must be positive")

    @property
    def dim(self):
        return len(self.weights)

    def evaluate(self, X):
        return np.abs(X) @ np.asarray(self.weights, dtype=float)

    def domain(self):
        return FullSpace(self.dim)

    def conjugate_values(self, S):
        w = np.asarray(self.weights, dtype=float)
        return np.where(np.all(np.abs(S) <= w + SLOPE_ATOL, axis=1), 0.0, INF)

    def to_json(self):
        return {"type": "abs", "weights": list(self.weights)}


@dataclass(frozen=True, eq=False)
class EuclidNorm(ConvexFn):
    """x -> w ||x||_2."""
    weight: float
    n: int

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError("EuclidNorm weight must be positive")

    @property
    def dim(self):
        return self.n

    def evaluate(self, X):
        return self.weight * np.linalg.norm(X, axis=1)

    def domain(self):
        return FullSpace(self.n)

    def conjugate_values(self, S):
        return np.where(np.linalg.norm(S, axis=1) <= self.weight + SLOPE_ATOL, 0.0, INF)

    def to_json(self):
        return {"type": "norm", "weight": self.weight, "dim": self.n}


@dataclass(frozen=True, eq=False)
class NegSqrt1D(ConvexFn):
    """x -> -sqrt(x) on x >= 0, +inf otherwise."""

    @property
    def dim(self):
        return 1

    def evaluate(self, X):
        x = X[:, 0]
        with np.errstate(invalid="ignore"):
            return np.where(x >= 0, -np.sqrt(np.maximum(x, 0.0)), INF)

    def domain(self):
        return Interval(XInterval(0.0, INF))

    def conjugate_values(self, S):
        s = S[:, 0]
        with np.errstate(divide="ignore"):
            return np.where(s < 0, -1.0 / (4.0 * np.where(s < 0, s, -1.0)), INF)

    def to_json(self):
        return {"type": "neg_sqrt"}


@dataclass(frozen=True, eq=False)
class Exp1D(ConvexFn):
    """x -> w exp(x) with w > 0; bounded below, infimum not attained."""
    weight: float = 1.0

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError("Exp1D weight must be positive")

    @property
    def dim(self):
        return 1

    def evaluate(self, X):
        with np.errstate(over="ignore"):
            return self.weight * np.exp(X[:, 0])

    def domain(self):
        return FullSpace(1)

    def conjugate_values(self, S):
        s = S[:, 0]
        positive = np.where(s > 0, s, 1.0)
        inner = positive * np.log(positive / self.weight) - positive
        return np.where(s > 0, inner, np.where(s == 0, 0.0, INF))

    def to_json(self):
        return {"type": "exp", "weight": self.weight}


@dataclass(frozen=True, eq=False)
class Indicator(ConvexFn):
    """delta(.; C): 0 on C, +inf off C."""
    region: ConvexSetDesc

    @property
    def dim(self):
        return self.region.dim

    def evaluate(self, X):
        return np.where(self.region.member(X), 0.0, INF)

    def domain(self):
        return self.region

    def conjugate_values(self, S):
        if not has_exact_support(self.region):
            return None
        values, _ = self.region.support(S)
        return values

    def to_json(self):
        return {"type": "indicator", "set": self.region.to_json()}


@dataclass(frozen=True, eq=False)
class Sum(ConvexFn):
    first: ConvexFn
    second: ConvexFn

    def __post_init__(self):
        if self.first.dim != self.second.dim:
            raise DimensionMismatch(self.first.dim, self.second.dim, what="summand")
        try:
            A1, b1 = self.first.domain().halfspaces()
            A2, b2 = self.second.domain().halfspaces()
        except UnsupportedDomainShape:
            return
        # radius 0 is fine (a point or a line); None means the domains miss each other
        if chebyshev_radius(np.vstack([A1, A2]), np.concatenate([b1, b2])) is None:
            raise ValueError("Sum of functions with disjoint domains is not proper")

    @property
    def dim(self):
        return self.first.dim

    def evaluate(self, X):
        return ext_add_arrays(self.first.evaluate(X), self.second.evaluate(X))

    def domain(self):
        return intersect_sets(self.first.domain(), self.second.domain())

    def conjugate_values(self, S):
        for f, g in ((self.first, self.second), (self.second, self.first)):
            if isinstance(g, Indicator) and isinstance(g.region, FullSpace):
                return f.conjugate_values(S)
            if isinstance(g, Affine):
                shifted = f.conjugate_values(S - np.asarray(g.a, dtype=float))
                return None if shifted is None else shifted - g.b
        return None

    def to_json(self):
        return {"type": "sum", "first": self.first.to_json(), "second": self.second.to_json()}


@dataclass(frozen=True, eq=False)
class Scale(ConvexFn):
    """x -> lam f(x) with lam > 0."""
    lam: float
    inner: ConvexFn

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("Scale needs lam > 0")

    @property
    def dim(self):
        return self.inner.dim

    def evaluate(self, X):
        return self.lam * self.inner.evaluate(X)

    def domain(self):
        return self.inner.domain()

    def conjugate_values(self, S):
        inner = self.inner.conjugate_values(S / self.lam)
        return None if inner is None else self.lam * inner

    def to_json(self):
        return {"type": "scale", "lam": self.lam, "f": self.inner.to_json()}


@dataclass(frozen=True, eq=False)
class Separable(ConvexFn):
    """(x, y) -> f1(x) + f2(y)."""
    first: ConvexFn
    second: ConvexFn

    @property
    def dim(self):
        return self.first.dim + self.second.dim

    def evaluate(self, X):
        d = self.first.dim
        return ext_add_arrays(self.first.evaluate(X[:, :d]), self.second.evaluate(X[:, d:]))

    def domain(self):
        first, second = self.first.domain(), self.second.domain()
        if isinstance(first, FullSpace) and isinstance(second, FullSpace):
            return FullSpace(self.dim)
        return Product(first, second)

    def conjugate_values(self, S):
        d = self.first.dim
        c1 = self.first.conjugate_values(S[:, :d])
        c2 = self.second.conjugate_values(S[:, d:])
        if c1 is None or c2 is None:
            return None
        return c1 + c2

    def to_json(self):
        return {"type": "separable", "first": self.first.to_json(), "second": self.second.to_json()}


@dataclass(frozen=True, eq=False)
class Sampled(ConvexFn):
    """Convex data on a grid, linearly interpolated between grid points.

    In 1D the table may hold +inf outside one contiguous finite run, and
    extrapolate=True continues the function affinely past finite grid ends.
    Higher-dimensional tables must be finite everywhere.
    """
    grid: Grid
    values: np.ndarray
    extrapolate: bool = False
    convexity_tol: float = 1e-9
    # 1D only: values at the two ends of the finite run that replace the
    # interpolated ones; an upward jump there keeps f convex but not closed
    edge_values: Tuple[Optional[float], Optional[float]] = (None, None)
    _interp: Any = field(init=False, default=None, repr=False)

    def __post_init__(self):
        table = np.asarray(self.values, dtype=float).reshape(self.grid.counts)
        if np.isnan(table).any() or np.isneginf(table).any():
            raise ValueError("Sampled values must be finite or +inf")
        finite = np.isfinite(table)
        if not finite.any():
            raise ValueError("Sampled function has an empty domain")
        if self.grid.dim == 1:
            idx = np.flatnonzero(finite)
            if idx[-1] - idx[0] + 1 != idx.size:
                raise NotConvex("Finite samples of a 1D function must be contiguous")
        elif not finite.all():
            raise UnsupportedDomainShape("Sampled tables above dimension 1 must be finite")
        object.__setattr__(self, "values", table)
        self._certify_convexity(table)
        self._check_edge_values()
        if self.grid.dim > 1:
            axes = [self.grid.axis_points(i) for i in range(self.grid.dim)]
            interp = RegularGridInterpolator(axes, table, bounds_error=False, fill_value=INF)
            object.__setattr__(self, "_interp", interp)

    def _certify_convexity(self, table: np.ndarray):
        for axis in range(table.ndim):
            t = np.moveaxis(table, axis, 0)
            if t.shape[0] < 3:
                continue
            left, mid, right = t[:-2], t[1:-1], t[2:]
            usable = np.isfinite(left) & np.isfinite(mid) & np.isfinite(right)
            with np.errstate(invalid="ignore"):
                second = np.where(usable, left - 2.0 * mid + right, 0.0)
            scale = 1.0 + np.abs(np.where(usable, mid, 0.0))
            if np.any(second < -self.convexity_tol * scale):
                worst = float(second.min())
                raise NotConvex(f"Second difference {worst:.3g} along axis {axis} breaks convexity")

    def _check_edge_values(self):
        left, right = self.edge_values
        if left is None and right is None:
            return
        if self.grid.dim != 1:
            raise UnsupportedDomainShape("Edge values are only supported in dimension 1")
        _, fx, _, _ = self._finite_run()
        for value, end, extends in ((left, fx[0], self.extends_left()), (right, fx[-1], self.extends_right())):
            if value is None:
                continue
            if extends:
                raise ValueError("An extrapolated end is interior to the domain and cannot jump")
            if value < end - self.convexity_tol:
                raise NotConvex(f"Edge value {value} lies below the limit {end} of the samples")

    @property
    def dim(self):
        return self.grid.dim

    def _finite_run(self):
        xs = self.grid.axis_points(0)
        finite = np.isfinite(self.values)
        return xs[finite], self.values[finite], finite[0], finite[-1]

    def edge_slopes(self) -> Tuple[float, float]:
        """Slopes used for affine continuation at the left and right ends (1D)."""
        xs, fx, _, _ = self._finite_run()
        if xs.size < 2:
            return -INF, INF
        return (fx[1] - fx[0]) / (xs[1] - xs[0]), (fx[-1] - fx[-2]) / (xs[-1] - xs[-2])

    def extends_left(self) -> bool:
        return self.extrapolate and bool(np.isfinite(self.values[0])) and self.values.size > 1

    def extends_right(self) -> bool:
        return self.extrapolate and bool(np.isfinite(self.values[-1])) and self.values.size > 1

    def evaluate(self, X):
        if self.grid.dim > 1:
            return self._interp(X)
        xs, fx, _, _ = self._finite_run()
        x = X[:, 0]
        out = np.full(x.shape[0], INF)
        inside = (x >= xs[0] - 1e-12) & (x <= xs[-1] + 1e-12)
        out[inside] = np.interp(x[inside], xs, fx)
        slope_lo, slope_hi = self.edge_slopes()
        if self.extends_left():
            left = x < xs[0]
            out[left] = fx[0] + slope_lo * (x[left] - xs[0])
        if self.extends_right():
            right = x > xs[-1]
            out[right] = fx[-1] + slope_hi * (x[right] - xs[-1])
        left_value, right_value = self.edge_values
        if left_value is not None:
            out[np.abs(x - xs[0]) <= 1e-12] = left_value
        if right_value is not None:
            out[np.abs(x - xs[-1]) <= 1e-12] = right_value
        return out

    def conjugate_values(self, S):
        # 1D only: the interpolant is piecewise linear, so its conjugate is the
        # discrete transform of the nodes, +inf past an extrapolated edge slope
        if self.grid.dim != 1:
            return None
        xs, fx, _, _ = self._finite_run()
        s = S[:, 0]
        values, _ = legendre_1d(xs, fx, s)
        slope_lo, slope_hi = self.edge_slopes()
        if self.extends_left():
            values = np.where(s < slope_lo - SLOPE_ATOL, INF, values)
        if self.extends_right():
            values = np.where(s > slope_hi + SLOPE_ATOL, INF, values)
        return values

    def closure(self) -> "Sampled":
        """The closed convex hull of the data: lower hull of the 1D nodes, edge jumps dropped."""
        if self.grid.dim != 1:
            return self
        xs, fx, _, _ = self._finite_run()
        hull = lower_hull(xs, fx)
        values = self.values.copy()
        values[np.isfinite(values)] = np.interp(xs, xs[hull], fx[hull])
        return Sampled(self.grid, values, self.extrapolate, self.convexity_tol)

    def domain(self):
        if self.grid.dim > 1:
            lo = tuple(axis[0] for axis in self.grid.axes)
            hi = tuple(axis[1] for axis in self.grid.axes)
            return Box(lo, hi)
        xs, _, _, _ = self._finite_run()
        lo = -INF if self.extends_left() else xs[0]
        hi = INF if self.extends_right() else xs[-1]
        return Interval(XInterval(lo, hi))

    def to_json(self):
        flat = [None if not np.isfinite(v) else float(v) for v in self.values.ravel()]
        return {
            "type": "sampled",
            "grid": self.grid.to_json(),
            "values": flat,
            "extrapolate": self.extrapolate,
            "convexity_tol": self.convexity_tol,
            "edge_values": list(self.edge_values),
        }


@dataclass(frozen=True, eq=False)
class Refined1D(ConvexFn):
    """A 1D table with extra nodes strictly inside its finite run.

    The extra nodes replace the base nodes they span; the interpolant and its
    conjugate run through the merged node set, and extrapolated ends continue
    with the merged end slopes.
    """
    base: Sampled
    x: Tuple[float, ...]
    values: Tuple[float, ...]
    _nodes: Any = field(init=False, default=None, repr=False)

    def __post_init__(self):
        if self.base.dim != 1:
            raise UnsupportedDomainShape("Only 1D tables take extra nodes")
        if self.base.edge_values != (None, None):
            raise ValueError("Tables with edge values cannot be refined")
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.shape != v.shape:
            raise DimensionMismatch(x.size, v.size, what="refined values")
        xs, fx, _, _ = self.base._finite_run()
        keep = np.isfinite(v) & (x > xs[0]) & (x < xs[-1])
        if not keep.any():
            object.__setattr__(self, "_nodes", (xs, fx))
            return
        lo, hi = x[keep].min(), x[keep].max()
        outside = (xs < lo - 1e-12) | (xs > hi + 1e-12)
        nodes = np.concatenate([xs[outside], x[keep]])
        vals = np.concatenate([fx[outside], v[keep]])
        order = np.argsort(nodes, kind="mergesort")
        object.__setattr__(self, "_nodes", (nodes[order], vals[order]))

    @property
    def dim(self):
        return 1

    def _edge_slopes(self) -> Tuple[float, float]:
        xs, fx = self._nodes
        if xs.size < 2:
            return -INF, INF
        return (fx[1] - fx[0]) / (xs[1] - xs[0]), (fx[-1] - fx[-2]) / (xs[-1] - xs[-2])

    def evaluate(self, X):
        xs, fx = self._nodes
        x = X[:, 0]
        out = np.full(x.shape[0], INF)
        inside = (x >= xs[0] - 1e-12) & (x <= xs[-1] + 1e-12)
        out[inside] = np.interp(x[inside], xs, fx)
        slope_lo, slope_hi = self._edge_slopes()
        if self.base.extends_left():
            left = x < xs[0]
            out[left] = fx[0] + slope_lo * (x[left] - xs[0])
        if self.base.extends_right():
            right = x > xs[-1]
            out[right] = fx[-1] + slope_hi * (x[right] - xs[-1])
        return out

    def conjugate_values(self, S):
        xs, fx = self._nodes
        s = S[:, 0]
        values, _ = legendre_1d(xs, fx, s)
        slope_lo, slope_hi = self._edge_slopes()
        if self.base.extends_left():
            values = np.where(s < slope_lo - SLOPE_ATOL, INF, values)
        if self.base.extends_right():
            values = np.where(s > slope_hi + SLOPE_ATOL, INF, values)
        return values

    def domain(self):
        return self.base.domain()

    def to_json(self):
        return {
            "type": "refined",
            "base": self.base.to_json(),
            "x": [float(v) for v in self.x],
            "values": [None if not np.isfinite(v) else float(v) for v in self.values],
        }


@dataclass(frozen=True, eq=False)
class ConjugateOf(ConvexFn):
    """The Legendre-Fenchel conjugate of a function with a closed-form conjugate."""
    of: ConvexFn

    def __post_init__(self):
        if not self.of.has_closed_conjugate:
            raise ValueError(f"{type(self.of).__name__} has no closed-form conjugate")

    @property
    def dim(self):
        return self.of.dim

    def evaluate(self, X):
        return self.of.conjugate_values(X)

    def domain(self):
        raise UnsupportedDomainShape("Domains of conjugates are not tracked symbolically")

    def conjugate_values(self, S):
        # f** is the closed hull of f; only tables with edge jumps differ from it
        base = self.of.closure() if isinstance(self.of, Sampled) else self.of
        return base.evaluate(S)

    def to_json(self):
        return {"type": "conjugate", "of": self.of.to_json()}


def evaluate(f: ConvexFn, x):
    """f at one point (returns a float) or at the rows of an (N, n) array."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 0 or (arr.ndim == 1 and arr.shape[0] == f.dim)
    points = as_points(arr, f.dim)
    values = f.evaluate(points)
    if np.isneginf(values).any():
        raise ValueError("A proper convex function never takes the value -inf")
    return float(values[0]) if single else values


def effective_domain(f: ConvexFn) -> ConvexSetDesc:
    """dom f = {x : f(x) < +inf}."""
    return f.domain()


def epigraph(f: ConvexFn) -> Epigraph:
    """epi f = {(x, alpha) : alpha >= f(x)}."""
    return Epigraph(f)


def check_lsc_on_grid(f: ConvexFn, grid: Grid, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """Heuristic lower semicontinuity screen along grid lines.

    A finite grid value may exceed its neighbour only by LSC_GROWTH times the
    next increment further along the line (plus set_tol); a larger excess is
    read as an upward jump the function could not have if it were l.s.c.
    """
    if grid.dim != f.dim:
        raise DimensionMismatch(f.dim, grid.dim, what="grid")
    table = f.evaluate(grid.points()).reshape(grid.counts)
    for axis in range(table.ndim):
        lines = np.moveaxis(table, axis, 0)
        n = lines.shape[0]
        for i in range(n):
            for step in (-1, 1):
                j, k = i + step, i + 2 * step
                if not (0 <= j < n):
                    continue
                fi, fj = lines[i], lines[j]
                if 0 <= k < n:
                    fk = lines[k]
                    usable = np.isfinite(fi) & np.isfinite(fj) & np.isfinite(fk)
                    increment = np.where(usable, np.abs(fj - fk), 0.0)
                else:
                    usable = np.zeros_like(fi, dtype=bool)
                    increment = np.zeros_like(fi)
                excess = np.where(usable, fi - fj, -INF)
                if np.any(excess > LSC_GROWTH * increment + tol.set_tol):
                    logging.info(f"l.s.c. screen failed along axis {axis} at index {i}")
                    return False
    return True


def function_from_json(obj: Dict[str, Any]) -> ConvexFn:
    """Build a ConvexFn from its JSON node (key "type" holds the tag)."""
    try:
        kind = obj["type"]
        if kind == "affine":
            return Affine(_vec(obj["a"]), float(obj.get("b", 0.0)))
        if kind == "quad":
            return QuadDiag(_vec(obj["q"]), _vec(obj.get("shift", [])))
        if kind == "abs":
            return AbsNorm(_vec(obj["weights"]))
        if kind == "norm":
            return EuclidNorm(float(obj.get("weight", 1.0)), int(obj["dim"]))
        if kind == "neg_sqrt":
            return NegSqrt1D()
        if kind == "exp":
            return Exp1D(float(obj.get("weight", 1.0)))
        if kind == "indicator":
            return Indicator(set_from_json(obj["set"]))
        if kind == "sum":
            return Sum(function_from_json(obj["first"]), function_from_json(obj["second"]))
        if kind == "scale":
            return Scale(float(obj["lam"]), function_from_json(obj["f"]))
        if kind == "separable":
            return Separable(function_from_json(obj["first"]), function_from_json(obj["second"]))
        if kind == "sampled":
            values = np.array([INF if v is None else float(v) for v in obj["values"]])
            return Sampled(
                grid_from_json(obj["grid"]),
                values,
                extrapolate=bool(obj.get("extrapolate", False)),
                convexity_tol=float(obj.get("convexity_tol", 1e-9)),
                edge_values=tuple(None if v is None else float(v) for v in obj.get("edge_values", [None, None])),
            )
        if kind == "refined":
            base = function_from_json(obj["base"])
            if not isinstance(base, Sampled):
                raise SchemaError("A refined table needs a sampled base")
            values = tuple(INF if v is None else float(v) for v in obj["values"])
            return Refined1D(base, _vec(obj["x"]), values)
        if kind == "conjugate":
            return ConjugateOf(function_from_json(obj["of"]))
    except KeyError as e:
        raise SchemaError(f"Function node {obj!r} missing field {e}") from e
    raise SchemaError(f"Unknown function type {obj.get('type')!r}")


def function_to_json(f: ConvexFn) -> Dict[str, Any]:
    return f.to_json()
