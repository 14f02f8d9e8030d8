"""Convex set descriptions, support functions, polar sets and epsilon-normals."""
import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import linprog

from src.dual_sets import DualSet, chunked_membership, grid_support
from src.errors import DimensionMismatch, SchemaError, UnsupportedDomainShape
from src.numerics import (
    DEFAULT_TOLERANCES,
    INF,
    Tolerances,
    XInterval,
    as_points,
    interval_from_json,
    iter_chunks,
    unit_directions,
)

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

MEMBER_ATOL = 1e-9


def _zero_support_mask(D: np.ndarray) -> np.ndarray:
    return np.all(np.abs(D) <= MEMBER_ATOL, axis=1)


class ConvexSetDesc:
    """Base class of the set vocabulary.

    Subclasses provide exact membership and a support function returning
    (values, flagged) where flagged marks values that are only lower bounds
    because the maximizer sat on the search window boundary.
    """

    dim: int

    def member(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def support(self, D: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def halfspaces(self) -> Tuple[np.ndarray, np.ndarray]:
        """H-representation (A, b) of {x : A x <= b}; only polyhedral nodes have one."""
        raise UnsupportedDomainShape(f"{type(self).__name__} has no polyhedral description")

    def to_json(self) -> Dict[str, Any]:
        raise NotImplementedError

    def contains(self, x) -> bool:
        return bool(self.member(as_points(x, self.dim))[0])

    def support_at(self, d, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
        values, _ = self.support(as_points(d, self.dim), tol)
        return float(values[0])


@dataclass(frozen=True, eq=False)
class Interval(ConvexSetDesc):
    bounds: XInterval

    @property
    def dim(self):
        return 1

    def member(self, X):
        x = X[:, 0]
        return (x >= self.bounds.lo - MEMBER_ATOL) & (x <= self.bounds.hi + MEMBER_ATOL)

    def support(self, D, tol=DEFAULT_TOLERANCES):
        d = D[:, 0]
        with np.errstate(invalid="ignore"):
            values = np.where(d > 0, d * self.bounds.hi, np.where(d < 0, d * self.bounds.lo, 0.0))
        return values, np.zeros(d.shape[0], dtype=bool)

    def halfspaces(self):
        rows, rhs = [], []
        if self.bounds.hi < INF:
            rows.append([1.0])
            rhs.append(self.bounds.hi)
        if self.bounds.lo > -INF:
            rows.append([-1.0])
            rhs.append(-self.bounds.lo)
        return np.array(rows, dtype=float).reshape(-1, 1), np.array(rhs, dtype=float)

    def to_json(self):
        return {"type": "interval", **self.bounds.to_json()}


@dataclass(frozen=True, eq=False)
class Box(ConvexSetDesc):
    lo: Tuple[float, ...]
    hi: Tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise DimensionMismatch(len(self.lo), len(self.hi), what="box bound")

    @property
    def dim(self):
        return len(self.lo)

    def member(self, X):
        lo, hi = np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)
        return np.all((X >= lo - MEMBER_ATOL) & (X <= hi + MEMBER_ATOL), axis=1)

    def support(self, D, tol=DEFAULT_TOLERANCES):
        total = np.zeros(D.shape[0])
        for i in range(self.dim):
            part, _ = Interval(XInterval(self.lo[i], self.hi[i])).support(D[:, i:i + 1])
            total = total + part
        return total, np.zeros(D.shape[0], dtype=bool)

    def halfspaces(self):
        rows, rhs = [], []
        for i in range(self.dim):
            A_i, b_i = Interval(XInterval(self.lo[i], self.hi[i])).halfspaces()
            for row, value in zip(A_i, b_i):
                full = np.zeros(self.dim)
                full[i] = row[0]
                rows.append(full)
                rhs.append(value)
        return np.array(rows, dtype=float).reshape(-1, self.dim), np.array(rhs, dtype=float)

    def to_json(self):
        enc = lambda v: None if abs(v) == INF else v
        return {"type": "box", "lo": [enc(v) for v in self.lo], "hi": [enc(v) for v in self.hi]}


@dataclass(frozen=True, eq=False)
class Ball(ConvexSetDesc):
    center: Tuple[float, ...]
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("Ball radius must be nonnegative")

    @property
    def dim(self):
        return len(self.center)

    def member(self, X):
        c = np.asarray(self.center, dtype=float)
        return np.linalg.norm(X - c, axis=1) <= self.radius + MEMBER_ATOL

    def support(self, D, tol=DEFAULT_TOLERANCES):
        c = np.asarray(self.center, dtype=float)
        return D @ c + self.radius * np.linalg.norm(D, axis=1), np.zeros(D.shape[0], dtype=bool)

    def to_json(self):
        return {"type": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class HalfspaceIntersection(ConvexSetDesc):
    """{x : <a_i, x> <= b_i for every row}."""
    A: Tuple[Tuple[float, ...], ...]
    b: Tuple[float, ...]

    def __post_init__(self):
        if len(self.A) != len(self.b):
            raise DimensionMismatch(len(self.A), len(self.b), what="right-hand side")
        if len({len(row) for row in self.A}) > 1:
            raise ValueError("All halfspace normals must share one dimension")
        object.__setattr__(self, "_corners", {})

    @property
    def dim(self):
        return len(self.A[0])

    def halfspaces(self):
        return np.asarray(self.A, dtype=float), np.asarray(self.b, dtype=float)

    def member(self, X):
        A, b = self.halfspaces()
        return np.all(X @ A.T <= b + MEMBER_ATOL, axis=1)

    def window_corners(self, radius: float) -> np.ndarray:
        """Vertices of the polyhedron clipped to [-radius, radius]^n."""
        if radius in self._corners:
            return self._corners[radius]
        A, b = self.halfspaces()
        n = self.dim
        rows = np.vstack([A, np.eye(n), -np.eye(n)])
        rhs = np.concatenate([b, np.full(n, radius), np.full(n, radius)])
        found = []
        for combo in itertools.combinations(range(rows.shape[0]), n):
            M = rows[list(combo)]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            x = np.linalg.solve(M, rhs[list(combo)])
            if np.all(rows @ x <= rhs + 1e-9 * (1.0 + np.abs(rhs))):
                found.append(x)
        corners = np.unique(np.round(np.array(found), 12), axis=0) if found else np.empty((0, n))
        self._corners[radius] = corners
        return corners

    def support(self, D, tol=DEFAULT_TOLERANCES):
        radius = tol.window_radius
        near, far = self.window_corners(radius), self.window_corners(2.0 * radius)
        if near.shape[0] == 0:
            return np.full(D.shape[0], -INF), np.zeros(D.shape[0], dtype=bool)
        h_near = (D @ near.T).max(axis=1)
        h_far = (D @ far.T).max(axis=1)
        # a polyhedron's clipped support keeps growing exactly when it is unbounded
        grows = h_far > h_near + 1e-9 * (1.0 + np.abs(h_near))
        return np.where(grows, INF, h_near), np.zeros(D.shape[0], dtype=bool)

    def to_json(self):
        return {"type": "halfspaces", "A": [list(row) for row in self.A], "b": list(self.b)}


@dataclass(frozen=True, eq=False)
class Cone(HalfspaceIntersection):
    """Polyhedral cone {x : A x <= 0} with apex 0."""

    @classmethod
    def from_normals(cls, A) -> "Cone":
        A = tuple(tuple(float(v) for v in row) for row in A)
        return cls(A, tuple(0.0 for _ in A))

    def __post_init__(self):
        super().__post_init__()
        if any(v != 0 for v in self.b):
            raise ValueError("A cone has zero right-hand sides")

    def polar_member(self, X: np.ndarray, slack: float = MEMBER_ATOL) -> np.ndarray:
        values, _ = self.support(X)
        return values <= slack

    def to_json(self):
        return {"type": "cone", "A": [list(row) for row in self.A]}


@dataclass(frozen=True, eq=False)
class Singleton(ConvexSetDesc):
    point: Tuple[float, ...]

    @property
    def dim(self):
        return len(self.point)

    def member(self, X):
        p = np.asarray(self.point, dtype=float)
        return np.all(np.abs(X - p) <= MEMBER_ATOL, axis=1)

    def support(self, D, tol=DEFAULT_TOLERANCES):
        return D @ np.asarray(self.point, dtype=float), np.zeros(D.shape[0], dtype=bool)

    def halfspaces(self):
        p = np.asarray(self.point, dtype=float)
        return np.vstack([np.eye(self.dim), -np.eye(self.dim)]), np.concatenate([p, -p])

    def to_json(self):
        return {"type": "singleton", "point": list(self.point)}


@dataclass(frozen=True, eq=False)
class FullSpace(ConvexSetDesc):
    n: int

    @property
    def dim(self):
        return self.n

    def member(self, X):
        return np.ones(X.shape[0], dtype=bool)

    def support(self, D, tol=DEFAULT_TOLERANCES):
        return np.where(_zero_support_mask(D), 0.0, INF), np.zeros(D.shape[0], dtype=bool)

    def halfspaces(self):
        return np.empty((0, self.n)), np.empty(0)

    def to_json(self):
        return {"type": "full", "dim": self.n}


@dataclass(frozen=True, eq=False)
class Product(ConvexSetDesc):
    first: ConvexSetDesc
    second: ConvexSetDesc

    @property
    def dim(self):
        return self.first.dim + self.second.dim

    def member(self, X):
        d = self.first.dim
        return self.first.member(X[:, :d]) & self.second.member(X[:, d:])

    def support(self, D, tol=DEFAULT_TOLERANCES):
        d = self.first.dim
        h1, f1 = self.first.support(D[:, :d], tol)
        h2, f2 = self.second.support(D[:, d:], tol)
        return h1 + h2, f1 | f2

    def halfspaces(self):
        A1, b1 = self.first.halfspaces()
        A2, b2 = self.second.halfspaces()
        A = np.zeros((A1.shape[0] + A2.shape[0], self.dim))
        A[:A1.shape[0], :self.first.dim] = A1
        A[A1.shape[0]:, self.first.dim:] = A2
        return A, np.concatenate([b1, b2])

    def to_json(self):
        return {"type": "product", "first": self.first.to_json(), "second": self.second.to_json()}


@dataclass(frozen=True, eq=False)
class Translate(ConvexSetDesc):
    base: ConvexSetDesc
    shift: Tuple[float, ...]

    def __post_init__(self):
        if len(self.shift) != self.base.dim:
            raise DimensionMismatch(self.base.dim, len(self.shift), what="shift")

    @property
    def dim(self):
        return self.base.dim

    def member(self, X):
        return self.base.member(X - np.asarray(self.shift, dtype=float))

    def support(self, D, tol=DEFAULT_TOLERANCES):
        values, flagged = self.base.support(D, tol)
        return values + D @ np.asarray(self.shift, dtype=float), flagged

    def halfspaces(self):
        A, b = self.base.halfspaces()
        return A, b + A @ np.asarray(self.shift, dtype=float)

    def to_json(self):
        return {"type": "translate", "base": self.base.to_json(), "shift": list(self.shift)}


@dataclass(frozen=True, eq=False)
class Epigraph(ConvexSetDesc):
    """{(x, alpha) : alpha >= f(x)} for a ConvexFn f."""
    function: Any

    @property
    def dim(self):
        return self.function.dim + 1

    def member(self, X):
        n = self.function.dim
        values = self.function.evaluate(X[:, :n])
        return X[:, n] >= values - MEMBER_ATOL * (1.0 + np.abs(np.where(np.isfinite(values), values, 0.0)))

    def support(self, D, tol=DEFAULT_TOLERANCES):
        n = self.function.dim
        d_x, d_alpha = D[:, :n], D[:, n]
        values = np.full(D.shape[0], INF)
        flagged = np.zeros(D.shape[0], dtype=bool)
        flat = np.abs(d_alpha) <= MEMBER_ATOL
        if flat.any():
            dom_values, dom_flags = self.function.domain().support(d_x[flat], tol)
            values[flat] = dom_values
            flagged[flat] = dom_flags
        down = d_alpha < -MEMBER_ATOL
        if down.any():
            grid = tol.primal_grid(n)
            points = grid.points()
            fx = self.function.evaluate(points)
            finite = np.isfinite(fx)
            points, fx = points[finite], fx[finite]
            on_edge = grid.boundary_mask()[finite]
            idx = np.flatnonzero(down)
            for start, stop in iter_chunks(idx.size, 256):
                rows = idx[start:stop]
                scores = d_x[rows] @ points.T + d_alpha[rows, None] * fx[None, :]
                best = scores.argmax(axis=1)
                values[rows] = scores[np.arange(rows.size), best]
                flagged[rows] = on_edge[best]
        return values, flagged

    def to_json(self):
        return {"type": "epigraph", "function": self.function.to_json()}


@dataclass(frozen=True, eq=False)
class GraphOfG(ConvexSetDesc):
    """gph G = {(x, y) : y in G(x)} for a convex multifunction from R^m to R^k."""
    inner: ConvexSetDesc
    m: int
    k: int

    def __post_init__(self):
        if self.inner.dim != self.m + self.k:
            raise DimensionMismatch(self.m + self.k, self.inner.dim, what="graph set")

    @property
    def dim(self):
        return self.m + self.k

    def member(self, X):
        return self.inner.member(X)

    def fiber_member(self, x, Y: np.ndarray) -> np.ndarray:
        """Which rows of Y lie in G(x)."""
        x = np.broadcast_to(np.asarray(x, dtype=float).ravel(), (Y.shape[0], self.m))
        return self.inner.member(np.hstack([x, Y]))

    def support(self, D, tol=DEFAULT_TOLERANCES):
        return self.inner.support(D, tol)

    def halfspaces(self):
        return self.inner.halfspaces()

    def to_json(self):
        return {"type": "graph", "m": self.m, "k": self.k, "inner": self.inner.to_json()}


@dataclass(frozen=True, eq=False)
class Intersection(ConvexSetDesc):
    """A ∩ B for sets without a joint polyhedral description."""
    first: ConvexSetDesc
    second: ConvexSetDesc

    def __post_init__(self):
        if self.first.dim != self.second.dim:
            raise DimensionMismatch(self.first.dim, self.second.dim, what="intersected set")

    @property
    def dim(self):
        return self.first.dim

    def member(self, X):
        return self.first.member(X) & self.second.member(X)

    def support(self, D, tol=DEFAULT_TOLERANCES):
        grid = tol.primal_grid(self.dim)
        points = grid.points()
        inside = self.member(points)
        if not inside.any():
            return np.full(D.shape[0], -INF), np.zeros(D.shape[0], dtype=bool)
        points, on_edge = points[inside], grid.boundary_mask()[inside]
        values = np.empty(D.shape[0])
        flagged = np.zeros(D.shape[0], dtype=bool)
        for start, stop in iter_chunks(D.shape[0], 256):
            scores = D[start:stop] @ points.T
            best = scores.argmax(axis=1)
            values[start:stop] = scores[np.arange(stop - start), best]
            flagged[start:stop] = on_edge[best]
        return values, flagged

    def halfspaces(self):
        A1, b1 = self.first.halfspaces()
        A2, b2 = self.second.halfspaces()
        return np.vstack([A1, A2]), np.concatenate([b1, b2])

    def to_json(self):
        return {"type": "intersection", "first": self.first.to_json(), "second": self.second.to_json()}


def intersect_sets(first: ConvexSetDesc, second: ConvexSetDesc) -> ConvexSetDesc:
    """Simplest description of first ∩ second."""
    if first.dim != second.dim:
        raise DimensionMismatch(first.dim, second.dim, what="intersected set")
    if isinstance(first, FullSpace):
        return second
    if isinstance(second, FullSpace):
        return first
    if isinstance(first, Interval) and isinstance(second, Interval):
        lo = max(first.bounds.lo, second.bounds.lo)
        hi = min(first.bounds.hi, second.bounds.hi)
        if lo > hi:
            raise ValueError("Intersection of the domains is empty")
        return Interval(XInterval(lo, hi))
    try:
        A1, b1 = first.halfspaces()
        A2, b2 = second.halfspaces()
    except UnsupportedDomainShape:
        return Intersection(first, second)
    A, b = np.vstack([A1, A2]), np.concatenate([b1, b2])
    if A.shape[0] == 0:
        return FullSpace(first.dim)
    return HalfspaceIntersection(tuple(map(tuple, A.tolist())), tuple(b.tolist()))


EXACT_SUPPORT_NODES = (Interval, Box, Ball, HalfspaceIntersection, Singleton, FullSpace)


def has_exact_support(C: ConvexSetDesc) -> bool:
    """True when support values of C never rest on a window sweep."""
    if isinstance(C, EXACT_SUPPORT_NODES):
        return True
    if isinstance(C, Product):
        return has_exact_support(C.first) and has_exact_support(C.second)
    if isinstance(C, Translate):
        return has_exact_support(C.base)
    if isinstance(C, GraphOfG):
        return has_exact_support(C.inner)
    return False


def set_from_json(obj: Dict[str, Any]) -> ConvexSetDesc:
    """Build a set description from its JSON node."""
    try:
        kind = obj["type"]
        if kind == "interval":
            return Interval(interval_from_json(obj))
        if kind == "box":
            dec = lambda v, s: s * INF if v is None else float(v)
            return Box(tuple(dec(v, -1) for v in obj["lo"]), tuple(dec(v, 1) for v in obj["hi"]))
        if kind == "ball":
            return Ball(tuple(float(v) for v in obj["center"]), float(obj["radius"]))
        if kind == "halfspaces":
            return HalfspaceIntersection(
                tuple(tuple(float(v) for v in row) for row in obj["A"]),
                tuple(float(v) for v in obj["b"]),
            )
        if kind == "cone":
            return Cone.from_normals(obj["A"])
        if kind == "singleton":
            return Singleton(tuple(float(v) for v in obj["point"]))
        if kind == "full":
            return FullSpace(int(obj["dim"]))
        if kind == "product":
            return Product(set_from_json(obj["first"]), set_from_json(obj["second"]))
        if kind == "translate":
            return Translate(set_from_json(obj["base"]), tuple(float(v) for v in obj["shift"]))
        if kind == "epigraph":
            from src.functions import function_from_json
            return Epigraph(function_from_json(obj["function"]))
        if kind == "graph":
            return GraphOfG(set_from_json(obj["inner"]), int(obj["m"]), int(obj["k"]))
        if kind == "intersection":
            return Intersection(set_from_json(obj["first"]), set_from_json(obj["second"]))
    except KeyError as e:
        raise SchemaError(f"Set node {obj!r} missing field {e}") from e
    raise SchemaError(f"Unknown set type {obj.get('type')!r}")


def shifted(C: ConvexSetDesc, x_bar) -> ConvexSetDesc:
    """C - x_bar."""
    return Translate(C, tuple(-float(v) for v in np.ravel(x_bar)))


def _support_threshold_set(C: ConvexSetDesc, x_bar, level: float, tol: Tolerances, label: str) -> DualSet:
    """{x* : h_C(x*) - <x*, x_bar> <= level}."""
    x_bar = np.asarray(x_bar, dtype=float).ravel()

    def test(X):
        values, _ = C.support(X, tol)
        return values - X @ x_bar <= level + tol.member_tol

    def unresolved(X):
        values, flagged = C.support(X, tol)
        return flagged & (values - X @ x_bar <= level + tol.member_tol)

    return DualSet(dim=C.dim, membership=chunked_membership(test), unresolved=unresolved, label=label)


def polar(A: ConvexSetDesc, tol: Tolerances = DEFAULT_TOLERANCES) -> DualSet:
    """A0 = {x* : <x*, x> <= 1 for all x in A}."""
    logging.info(f"Computing polar of {type(A).__name__} in dimension {A.dim}")
    dset = _support_threshold_set(A, np.zeros(A.dim), 1.0, tol, label="polar")
    return dset.finalize(tol)


def eps_normal_set(C: ConvexSetDesc, x_bar, eps: float, tol: Tolerances = DEFAULT_TOLERANCES) -> DualSet:
    """N_eps(x_bar; C) = {x* : <x*, x - x_bar> <= eps for all x in C}."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if not C.contains(x_bar):
        raise ValueError(f"Base point {list(np.ravel(x_bar))} is not in the set")
    logging.info(f"Computing {eps:g}-normal set of {type(C).__name__} at {list(np.ravel(x_bar))}")
    dset = _support_threshold_set(C, x_bar, eps, tol, label=f"N_{eps:g}")
    return dset.finalize(tol)


def eps_normal_via_polar(C: ConvexSetDesc, x_bar, eps: float, tol: Tolerances = DEFAULT_TOLERANCES) -> DualSet:
    """eps * (C - x_bar)0, the polar-set form of the eps-normal set for eps > 0."""
    if eps <= 0:
        raise ValueError("The polar form needs eps > 0")
    return polar(shifted(C, x_bar), tol).scaled(eps)


def normal_cone_limit(C: ConvexSetDesc, x_bar, eps: float, tol: Tolerances = DEFAULT_TOLERANCES) -> DualSet:
    """Intersection over the eta ladder of eta * N_eps(x_bar; C)."""
    if not C.contains(x_bar):
        raise ValueError(f"Base point {list(np.ravel(x_bar))} is not in the set")
    x_bar = np.asarray(x_bar, dtype=float).ravel()
    logging.info(f"Normal cone of {type(C).__name__} at {list(x_bar)} over {len(tol.eta_ladder)} ladder steps")

    def test(X):
        values, _ = C.support(X, tol)
        excess = values - X @ x_bar
        inside = np.ones(X.shape[0], dtype=bool)
        for eta in tol.eta_ladder:
            # eta * N_eps membership of x* is N_eps membership of x*/eta
            inside &= excess / eta <= eps + tol.member_tol
        return inside

    dset = DualSet(dim=C.dim, membership=chunked_membership(test), label="normal cone")
    return dset.finalize(tol)


def cone_eps_normals(C: Cone, x_bar, eps: float, tol: Tolerances = DEFAULT_TOLERANCES) -> DualSet:
    """{x* in C0 : <x*, x_bar> >= -eps} for a cone C with apex 0."""
    if not isinstance(C, Cone):
        raise UnsupportedDomainShape("cone_eps_normals needs a Cone node")
    if not C.contains(x_bar):
        raise ValueError(f"Base point {list(np.ravel(x_bar))} is not in the cone")
    x_bar = np.asarray(x_bar, dtype=float).ravel()

    def test(X):
        return C.polar_member(X, tol.member_tol) & (X @ x_bar >= -eps - tol.member_tol)

    dset = DualSet(dim=C.dim, membership=chunked_membership(test), label=f"cone N_{eps:g}")
    return dset.finalize(tol)


def set_sample_points(C: ConvexSetDesc, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Primal window grid points that lie in C."""
    points = tol.primal_grid(C.dim).points()
    return points[C.member(points)]


def support_table(dset: DualSet, tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[np.ndarray, np.ndarray]:
    return grid_support(dset, unit_directions(dset.dim, tol.support_dirs), tol.dual_grid(dset.dim))


def chebyshev_radius(A: np.ndarray, b: np.ndarray, bound: float = 1.0) -> Optional[float]:
    """Radius of the largest ball inside {A x <= b} (capped at bound), None if empty."""
    n = A.shape[1]
    if A.shape[0] == 0:
        return bound
    norms = np.linalg.norm(A, axis=1)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([A, norms[:, None]])
    result = linprog(c, A_ub=A_ub, b_ub=b, bounds=[(None, None)] * n + [(0, bound)], method="highs")
    if result.status != 0:
        return None
    return float(result.x[-1])
