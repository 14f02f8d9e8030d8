import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from src.errors import DimensionMismatch, OppositeInfinities

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

# Extended reals are plain floats; math.inf / -math.inf mark the infinities.
ExtReal = float

INF = math.inf

# t-grid of the directional support formula
T_GRID_LO = 1e-6
T_GRID_HI = 1e6
T_GRID_POINTS = 241


def ext_add(a: ExtReal, b: ExtReal) -> ExtReal:
    """Extended addition; (+inf) + (-inf) is an error, never NaN."""
    a, b = float(a), float(b)
    if (a == INF and b == -INF) or (a == -INF and b == INF):
        raise OppositeInfinities(f"Cannot add {a} and {b}")
    return a + b


def ext_add_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise ext_add over numpy arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    clash = (np.isposinf(a) & np.isneginf(b)) | (np.isneginf(a) & np.isposinf(b))
    if np.any(clash):
        raise OppositeInfinities(f"Cannot add opposite infinities at {int(clash.sum())} positions")
    return a + b


def ext_scale(lam: float, a: ExtReal) -> ExtReal:
    """lam * a with the convention 0 * (+-inf) = 0."""
    if lam == 0:
        return 0.0
    return float(lam) * float(a)


def ext_scale_arrays(lam: float, a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if lam == 0:
        return np.zeros_like(a)
    return float(lam) * a


@dataclass(frozen=True)
class XInterval:
    """Closed interval with possibly infinite endpoints, or the EMPTY value."""
    lo: ExtReal
    hi: ExtReal

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("Interval endpoints must not be NaN")
        if lo > hi and not (lo == INF and hi == -INF):
            raise ValueError(f"Interval lower end {lo} exceeds upper end {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    def contains(self, x: float, slack: float = 0.0) -> bool:
        if self.is_empty:
            return False
        return self.lo - slack <= x <= self.hi + slack

    def clip(self, radius: float) -> "XInterval":
        """Intersection with [-radius, radius]."""
        if self.is_empty:
            return EMPTY
        lo, hi = max(self.lo, -radius), min(self.hi, radius)
        if lo > hi:
            return EMPTY
        return XInterval(lo, hi)

    def scaled(self, lam: float) -> "XInterval":
        if self.is_empty:
            return EMPTY
        if lam == 0:
            return XInterval(0.0, 0.0)
        ends = sorted((ext_scale(lam, self.lo), ext_scale(lam, self.hi)))
        return XInterval(ends[0], ends[1])

    def __add__(self, other: "XInterval") -> "XInterval":
        if self.is_empty or other.is_empty:
            return EMPTY
        return XInterval(ext_add(self.lo, other.lo), ext_add(self.hi, other.hi))

    def to_json(self):
        if self.is_empty:
            return {"empty": True}
        return {"interval": [None if self.lo == -INF else self.lo, None if self.hi == INF else self.hi]}

    def __str__(self):
        if self.is_empty:
            return "EMPTY"
        left = "(" if self.lo == -INF else "["
        right = ")" if self.hi == INF else "]"
        return f"{left}{self.lo:g}, {self.hi:g}{right}"


EMPTY = XInterval(INF, -INF)


def interval_from_json(obj) -> XInterval:
    if obj.get("empty"):
        return EMPTY
    lo, hi = obj["interval"]
    return XInterval(-INF if lo is None else float(lo), INF if hi is None else float(hi))


@dataclass(frozen=True)
class Grid:
    """Axis-aligned grid; each axis is (lo, hi, step) with (hi - lo)/step integral."""
    axes: Tuple[Tuple[float, float, float], ...]
    counts: Tuple[int, ...] = field(init=False)

    def __post_init__(self):
        axes = tuple(tuple(float(v) for v in axis) for axis in self.axes)
        if not 1 <= len(axes) <= 3:
            raise DimensionMismatch("1..3", len(axes), what="grid")
        counts = []
        for lo, hi, step in axes:
            if not (math.isfinite(lo) and math.isfinite(hi) and math.isfinite(step)):
                raise ValueError("Grid bounds and step must be finite")
            if step <= 0 or hi <= lo:
                raise ValueError(f"Bad grid axis ({lo}, {hi}, {step})")
            cells = (hi - lo) / step
            if abs(cells - round(cells)) > 1e-6 * max(1.0, cells):
                raise ValueError(f"(hi - lo)/step = {cells} is not an integer")
            counts.append(int(round(cells)) + 1)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "counts", tuple(counts))

    @classmethod
    def window(cls, dim: int, radius: float, per_axis: int) -> "Grid":
        """Symmetric grid over [-radius, radius]^dim with per_axis points (odd keeps 0 on the grid)."""
        step = 2.0 * radius / (per_axis - 1)
        return cls(tuple((-radius, radius, step) for _ in range(dim)))

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float], per_axis: int) -> "Grid":
        return cls(tuple((a, b, (b - a) / (per_axis - 1)) for a, b in zip(lo, hi)))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def steps(self) -> np.ndarray:
        return np.array([axis[2] for axis in self.axes])

    @property
    def max_step(self) -> float:
        return float(self.steps.max())

    @property
    def radius(self) -> float:
        return float(max(max(abs(lo), abs(hi)) for lo, hi, _ in self.axes))

    def axis_points(self, i: int) -> np.ndarray:
        lo, hi, _ = self.axes[i]
        # rounding keeps symmetric grids exactly on 0
        return np.round(np.linspace(lo, hi, self.counts[i]), 12)

    def points(self) -> np.ndarray:
        """All grid points as an (N, dim) array, first axis slowest."""
        mesh = np.meshgrid(*[self.axis_points(i) for i in range(self.dim)], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def boundary_mask(self) -> np.ndarray:
        """True for points on the outer faces of the grid box."""
        masks = []
        mesh = np.meshgrid(*[np.arange(c) for c in self.counts], indexing="ij")
        for i, idx in enumerate(mesh):
            masks.append((idx == 0) | (idx == self.counts[i] - 1))
        return np.logical_or.reduce(masks).ravel()

    def to_json(self):
        return {"axes": [list(axis) for axis in self.axes]}


def grid_from_json(obj) -> Grid:
    return Grid(tuple(tuple(axis) for axis in obj["axes"]))


@dataclass(frozen=True)
class Tolerances:
    set_tol: float = 5e-3
    window_radius: float = 10.0
    eta_ladder: Tuple[float, ...] = (1.0, 1e-1, 1e-2, 1e-3, 1e-4)
    gamma_splits: int = 33
    support_dirs: int = 64
    # slack of pointwise membership inequalities; set_tol is for set comparison
    member_tol: float = 1e-9

    def __post_init__(self):
        ladder = tuple(float(v) for v in self.eta_ladder)
        object.__setattr__(self, "eta_ladder", ladder)
        if self.set_tol <= 0:
            raise ValueError("set_tol must be positive")
        if self.window_radius <= 0:
            raise ValueError("window_radius must be positive")
        if not ladder or any(v <= 0 for v in ladder):
            raise ValueError("eta_ladder must hold positive values")
        if any(b >= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError("eta_ladder must be strictly decreasing")
        if self.gamma_splits < 3:
            raise ValueError("gamma_splits must be at least 3")
        if self.support_dirs < 8:
            raise ValueError("support_dirs must be at least 8")
        if self.member_tol < 0:
            raise ValueError("member_tol must be nonnegative")

    def replace(self, **changes) -> "Tolerances":
        values = {name: getattr(self, name) for name in self.__dataclass_fields__}
        values.update({k: v for k, v in changes.items() if v is not None})
        return Tolerances(**values)

    # resolution policy shared by the set computations
    def primal_grid(self, dim: int) -> Grid:
        per_axis = {1: 4001, 2: 201, 3: 41}[dim]
        return Grid.window(dim, self.window_radius, per_axis)

    def dual_grid(self, dim: int) -> Grid:
        per_axis = {1: 401, 2: 81, 3: 21}[dim]
        return Grid.window(dim, self.window_radius, per_axis)

    def split_lattice(self, dim: int) -> Grid:
        """Dual lattice for Minkowski split searches; twice the window so sums cover it."""
        per_axis = {1: 801, 2: 161, 3: 41}[dim]
        return Grid.window(dim, 2.0 * self.window_radius, per_axis)

    def gamma_values(self, total: float) -> np.ndarray:
        """Uniform samples of the first component of {g1 + g2 = total, gi >= 0}, endpoints included."""
        return np.linspace(0.0, total, self.gamma_splits)

    def conj_tol(self, grid: Grid, dual_radius: float) -> float:
        """First-order sweep error of a conjugate sampled on grid, for duals up to dual_radius."""
        return self.set_tol + grid.max_step * dual_radius


DEFAULT_TOLERANCES = Tolerances()


def t_grid() -> np.ndarray:
    return np.logspace(math.log10(T_GRID_LO), math.log10(T_GRID_HI), T_GRID_POINTS)


def as_points(x, dim: int) -> np.ndarray:
    """Coerce a point or batch of points to an (N, dim) float array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.shape[0] == dim else arr.reshape(-1, 1)
    if arr.shape[1] != dim:
        raise DimensionMismatch(dim, arr.shape[1])
    return arr


def unit_directions(dim: int, count: int) -> np.ndarray:
    """Deterministic unit directions: both signs in 1D, a circle in 2D, a Fibonacci sphere in 3D."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        angles = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    k = np.arange(count) + 0.5
    polar = np.arccos(1.0 - 2.0 * k / count)
    azimuth = np.pi * (1.0 + 5 ** 0.5) * k
    dirs = np.stack([np.cos(azimuth) * np.sin(polar), np.sin(azimuth) * np.sin(polar), np.cos(polar)], axis=1)
    axes = np.vstack([np.eye(3), -np.eye(3)])
    return np.vstack([axes, dirs])


def interval_hausdorff(a: XInterval, b: XInterval, radius: float) -> float:
    """Hausdorff distance of a and b after clipping both to [-radius, radius]."""
    a, b = a.clip(radius), b.clip(radius)
    if a.is_empty and b.is_empty:
        return 0.0
    if a.is_empty or b.is_empty:
        return INF
    return max(abs(a.lo - b.lo), abs(a.hi - b.hi))


def interval_hausdorff_on_window(a: XInterval, b: XInterval, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    return interval_hausdorff(a, b, tol.window_radius) < tol.set_tol


def iter_chunks(n: int, chunk: int):
    for start in range(0, n, chunk):
        yield start, min(n, start + chunk)


def corner_points(lo: Sequence[float], hi: Sequence[float]) -> np.ndarray:
    return np.array(list(itertools.product(*zip(lo, hi))), dtype=float)


def lower_hull(x: np.ndarray, fx: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of the points (x, fx), x increasing."""
    hull = []
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it sits on or above the chord from a to i
            cross = (x[b] - x[a]) * (fx[i] - fx[a]) - (fx[b] - fx[a]) * (x[i] - x[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


def legendre_1d(x: np.ndarray, fx: np.ndarray, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Discrete Legendre transform max_i (s x_i - f_i) for sorted x and finite f.

    Works on the lower hull: the maximizing vertex for slope s is found by a
    binary search over the increasing hull slopes. Returns (values, argmax
    indices into x).
    """
    x = np.asarray(x, dtype=float)
    fx = np.asarray(fx, dtype=float)
    s = np.asarray(s, dtype=float)
    hull = lower_hull(x, fx)
    xh, fh = x[hull], fx[hull]
    slopes = np.diff(fh) / np.diff(xh) if hull.size > 1 else np.empty(0)
    j = np.searchsorted(slopes, s, side="left")
    return s * xh[j] - fh[j], hull[j]
