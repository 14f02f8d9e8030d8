"""Computed subsets of the dual space.

A DualSet is a membership predicate over (N, dim) arrays of dual points plus
derived views: the interval it occupies in 1D, or sampled support values in
higher dimension. Membership is the source of truth; the views are computed
from it or from an independent formula and can be checked against it.
"""
import logging
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Tuple

import numpy as np
from sklearn.metrics import pairwise_distances_argmin_min

from src.numerics import (
    DEFAULT_TOLERANCES,
    EMPTY,
    INF,
    Grid,
    Tolerances,
    XInterval,
    as_points,
    interval_hausdorff,
    iter_chunks,
    unit_directions,
)

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

MemberFn = Callable[[np.ndarray], np.ndarray]

COARSE_POINTS = 401
FINE_POINTS = 8001
REFINE_ROUNDS = 6
REFINE_POINTS = 16


def _nothing_unresolved(points: np.ndarray) -> np.ndarray:
    return np.zeros(points.shape[0], dtype=bool)


@dataclass(frozen=True, eq=False)
class DualSet:
    dim: int
    membership: MemberFn
    interval_1d: Optional[XInterval] = None
    support_samples: Optional[Tuple[np.ndarray, np.ndarray]] = None
    window_flagged: bool = False
    # member decisions that rest on a supremum cut off by the window
    unresolved: MemberFn = _nothing_unresolved
    label: str = ""

    def member(self, x) -> np.ndarray:
        points = as_points(x, self.dim)
        return np.asarray(self.membership(points), dtype=bool)

    def contains(self, x) -> bool:
        return bool(self.member(x)[0])

    def mask(self, grid: Grid) -> np.ndarray:
        if grid.dim != self.dim:
            raise ValueError(f"Grid of dimension {grid.dim} for a set of dimension {self.dim}")
        return self.member(grid.points())

    def interval(self, tol: Tolerances = DEFAULT_TOLERANCES) -> XInterval:
        """1D view; the stored interval if present, else extracted from membership."""
        if self.dim != 1:
            raise ValueError("interval view exists only in dimension 1")
        if self.interval_1d is not None:
            return self.interval_1d
        return extract_interval(self.membership, tol.window_radius)

    def extracted_interval(self, tol: Tolerances = DEFAULT_TOLERANCES) -> XInterval:
        return extract_interval(self.membership, tol.window_radius)

    def is_empty_on_window(self, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
        if self.dim == 1:
            return self.interval(tol).clip(tol.window_radius).is_empty
        return not self.mask(tol.dual_grid(self.dim)).any()

    def finalize(self, tol: Tolerances = DEFAULT_TOLERANCES) -> "DualSet":
        """Fill the missing view and the window flag."""
        grid = tol.dual_grid(self.dim)
        points = grid.points()
        flagged = bool(np.any(self.unresolved(points)))
        if flagged:
            logging.warning(f"Set {self.label or '<unnamed>'} has members decided on a clipped window")
        if self.dim == 1:
            interval = self.interval_1d if self.interval_1d is not None else self.extracted_interval(tol)
            return replace(self, interval_1d=interval, window_flagged=flagged or self.window_flagged)
        samples = self.support_samples
        if samples is None:
            samples = grid_support(self, unit_directions(self.dim, tol.support_dirs), grid)
        return replace(self, support_samples=samples, window_flagged=flagged or self.window_flagged)

    def scaled(self, lam: float) -> "DualSet":
        if lam < 0:
            raise ValueError("Only nonnegative scaling is supported")
        if lam == 0:
            return point_set(np.zeros(self.dim), label=f"0*{self.label}")
        interval = None if self.interval_1d is None else self.interval_1d.scaled(lam)
        return DualSet(
            dim=self.dim,
            membership=lambda X: self.membership(X / lam),
            interval_1d=interval,
            window_flagged=self.window_flagged,
            unresolved=lambda X: self.unresolved(X / lam),
            label=f"{lam:g}*{self.label}",
        )

    def product(self, other: "DualSet") -> "DualSet":
        d = self.dim

        def membership(X):
            return self.membership(X[:, :d]) & other.membership(X[:, d:])

        def unresolved(X):
            return membership(X) & (self.unresolved(X[:, :d]) | other.unresolved(X[:, d:]))

        return DualSet(
            dim=d + other.dim,
            membership=membership,
            window_flagged=self.window_flagged or other.window_flagged,
            unresolved=unresolved,
            label=f"{self.label} x {other.label}",
        )


def point_set(point, label: str = "") -> DualSet:
    point = np.asarray(point, dtype=float).ravel()

    def membership(X):
        return np.all(np.abs(X - point) <= 1e-9, axis=1)

    interval = XInterval(point[0], point[0]) if point.size == 1 else None
    return DualSet(dim=point.size, membership=membership, interval_1d=interval, label=label)


def empty_set(dim: int, label: str = "") -> DualSet:
    return DualSet(
        dim=dim,
        membership=lambda X: np.zeros(X.shape[0], dtype=bool),
        interval_1d=EMPTY if dim == 1 else None,
        label=label,
    )


def interval_set(interval: XInterval, slack: float = 1e-9, label: str = "") -> DualSet:
    def membership(X):
        if interval.is_empty:
            return np.zeros(X.shape[0], dtype=bool)
        return (X[:, 0] >= interval.lo - slack) & (X[:, 0] <= interval.hi + slack)

    return DualSet(dim=1, membership=membership, interval_1d=interval, label=label)


def intersect(sets: Iterable[DualSet], label: str = "") -> DualSet:
    parts = list(sets)
    if not parts:
        raise ValueError("intersection of no sets")
    dim = parts[0].dim

    def membership(X):
        keep = np.ones(X.shape[0], dtype=bool)
        for part in parts:
            if not keep.any():
                break
            idx = np.flatnonzero(keep)
            keep[idx] = part.membership(X[idx])
        return keep

    def unresolved(X):
        inside = membership(X)
        return inside & np.logical_or.reduce([part.unresolved(X) for part in parts])

    interval = None
    if dim == 1 and all(part.interval_1d is not None for part in parts):
        lo = max(part.interval_1d.lo for part in parts)
        hi = min(part.interval_1d.hi for part in parts)
        interval = XInterval(lo, hi) if lo <= hi else EMPTY
    return DualSet(
        dim=dim,
        membership=membership,
        interval_1d=interval,
        window_flagged=any(part.window_flagged for part in parts),
        unresolved=unresolved,
        label=label,
    )


def union(sets: Iterable[DualSet], label: str = "") -> DualSet:
    parts = list(sets)
    if not parts:
        raise ValueError("union of no sets")
    dim = parts[0].dim

    def membership(X):
        found = np.zeros(X.shape[0], dtype=bool)
        for part in parts:
            todo = np.flatnonzero(~found)
            if todo.size == 0:
                break
            found[todo] = part.membership(X[todo])
        return found

    def unresolved(X):
        return np.logical_or.reduce([part.unresolved(X) & part.membership(X) for part in parts])

    return DualSet(
        dim=dim,
        membership=membership,
        window_flagged=any(part.window_flagged for part in parts),
        unresolved=unresolved,
        label=label,
    )


def _refine_edge(membership: MemberFn, outside: float, inside: float) -> float:
    """Locate the boundary of a convex 1D member set between a non-member and a member."""
    for _ in range(REFINE_ROUNDS):
        ts = np.linspace(outside, inside, REFINE_POINTS + 2)[1:-1]
        inside_mask = membership(ts.reshape(-1, 1))
        if inside_mask.any():
            k = int(np.argmax(inside_mask))
            inside = ts[k]
            if k > 0:
                outside = ts[k - 1]
        else:
            outside = ts[-1]
    return float(inside)


def extract_interval(membership: MemberFn, radius: float) -> XInterval:
    """Interval occupied by a convex 1D member set inside [-radius, radius].

    A member at the window edge turns that end into an infinite endpoint.
    """
    xs = np.linspace(-radius, radius, COARSE_POINTS)
    inside = np.asarray(membership(xs.reshape(-1, 1)), dtype=bool)
    if not inside.any():
        xs = np.linspace(-radius, radius, FINE_POINTS)
        inside = np.asarray(membership(xs.reshape(-1, 1)), dtype=bool)
        if not inside.any():
            return EMPTY
    idx = np.flatnonzero(inside)
    first, last = idx[0], idx[-1]
    lo = -INF if first == 0 else _refine_edge(membership, xs[first - 1], xs[first])
    hi = INF if last == xs.size - 1 else _refine_edge(membership, xs[last + 1], xs[last])
    return XInterval(lo, hi)


def grid_support(dset: DualSet, directions: np.ndarray, grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
    """Support values max <d, x*> over the grid members of dset, per direction.

    A maximizer on the outer face of the grid turns the value into +inf; a
    set with no grid member has support -inf.
    """
    points = grid.points()
    inside = dset.member(points)
    if not inside.any():
        return directions, np.full(directions.shape[0], -INF)
    members, on_edge = points[inside], grid.boundary_mask()[inside]
    scores = directions @ members.T
    best = scores.argmax(axis=1)
    values = scores[np.arange(directions.shape[0]), best]
    return directions, np.where(on_edge[best], INF, values)


def minkowski_sum(a: DualSet, b: DualSet, tol: Tolerances = DEFAULT_TOLERANCES, label: str = "") -> DualSet:
    """Member z iff z = u + v with u in a and v in b.

    Two intervals are added exactly; otherwise splits are searched over a dual
    lattice, taking lattice points from either summand.
    """
    if a.dim != b.dim:
        raise ValueError("Minkowski sum of sets of different dimension")
    if a.dim == 1 and a.interval_1d is not None and b.interval_1d is not None:
        return interval_set(a.interval_1d + b.interval_1d, label=label)
    lattice = tol.split_lattice(a.dim).points()
    lattice_a = lattice[a.member(lattice)]
    lattice_b = lattice[b.member(lattice)]

    def membership(Z):
        found = np.zeros(Z.shape[0], dtype=bool)
        for i, z in enumerate(Z):
            if lattice_a.shape[0] and b.membership(z[None, :] - lattice_a).any():
                found[i] = True
            elif lattice_b.shape[0] and a.membership(z[None, :] - lattice_b).any():
                found[i] = True
        return found

    return DualSet(
        dim=a.dim,
        membership=membership,
        window_flagged=a.window_flagged or b.window_flagged,
        label=label,
    )


def cloud_hausdorff(P: np.ndarray, Q: np.ndarray) -> float:
    if P.shape[0] == 0 and Q.shape[0] == 0:
        return 0.0
    if P.shape[0] == 0 or Q.shape[0] == 0:
        return INF
    _, d_pq = pairwise_distances_argmin_min(P, Q)
    _, d_qp = pairwise_distances_argmin_min(Q, P)
    return float(max(d_pq.max(), d_qp.max()))


def hausdorff_on_window(a: DualSet, b: DualSet, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Hausdorff distance of two dual sets clipped to the window.

    1D compares intervals; higher dimensions compare member points of the dual grid.
    """
    if a.dim != b.dim:
        raise ValueError("Cannot compare sets of different dimension")
    if a.dim == 1:
        return interval_hausdorff(a.interval(tol), b.interval(tol), tol.window_radius)
    grid = tol.dual_grid(a.dim)
    points = grid.points()
    return cloud_hausdorff(points[a.member(points)], points[b.member(points)])


def grid_equality_threshold(dim: int, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Set-equality threshold: set_tol in 1D, one dual-grid cell diagonal above."""
    if dim == 1:
        return tol.set_tol
    grid = tol.dual_grid(dim)
    return max(tol.set_tol, grid.max_step * np.sqrt(dim)) + 1e-12


def equal_on_window(a: DualSet, b: DualSet, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    distance = hausdorff_on_window(a, b, tol)
    if a.dim == 1:
        return distance < tol.set_tol
    return distance <= grid_equality_threshold(a.dim, tol)


def subset_on_grid(a: DualSet, b: DualSet, grid: Grid) -> bool:
    """Every grid member of a is a grid member of b."""
    points = grid.points()
    inside_a = a.member(points)
    if not inside_a.any():
        return True
    return bool(b.member(points[inside_a]).all())


def chunked_membership(test: Callable[[np.ndarray], np.ndarray], chunk: int = 4096) -> MemberFn:
    """Wrap a vectorized membership test so large batches are evaluated piecewise."""

    def membership(X):
        out = np.empty(X.shape[0], dtype=bool)
        for start, stop in iter_chunks(X.shape[0], chunk):
            out[start:stop] = test(X[start:stop])
        return out

    return membership
