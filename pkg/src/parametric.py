"""Parametric convex programs and the epsilon-subdifferential of their value function.

A problem minimizes phi(x, y) over decisions y, optionally subject to
(x, y) in the graph of a convex multifunction G. The value function mu is
tabulated on the parameter grid; its epsilon-subdifferential is computed
directly and through the approximate-solution formulas, which must agree.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.spatial import ConvexHull, QhullError

from src.dual_sets import DualSet, chunked_membership, cloud_hausdorff, equal_on_window, hausdorff_on_window
from src.errors import DimensionMismatch, NotASolution, UnsupportedDomainShape
from src.functions import ConvexFn, Indicator, Refined1D, Sampled, Sum
from src.numerics import (
    DEFAULT_TOLERANCES,
    INF,
    Grid,
    Tolerances,
    as_points,
    iter_chunks,
    unit_directions,
)
from src.sets import ConvexSetDesc, FullSpace
from src.subdiff import EpsSubdiffQuery, eps_subdiff_set
from src.transforms import (
    conjugate_at,
    difference_has_zero_interior,
    interior_meets,
    relative_interiors_meet,
)

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

# evenly spaced picks from an approximate solution set, besides the minimizer and axis extremes
MAX_Y_SAMPLES = 5

# parameter rows evaluated together when tabulating mu
VALUE_CHUNK = 64

# dual points times lattice points held in memory at once
SPLIT_BATCH = 2_000_000

TAIL_STEPS = 20

# refined parameter nodes per grid step, and grid steps refined on each side of x_bar
REFINE_FACTOR = 50
REFINE_CELLS = 2

REGULARITY_LABELS = {
    "a": "int(gph G) meets dom phi",
    "b": "phi is continuous at a point of gph G",
    "i": "the cone generated by dom phi - gph G is a closed subspace",
    "ii": "(0, 0) is an interior point of dom phi - gph G",
}


@dataclass(frozen=True, eq=False)
class ParametricProblem:
    phi: ConvexFn
    m: int
    k: int
    graph: Optional[ConvexSetDesc] = None
    _cache: Dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.phi.dim != self.m + self.k:
            raise DimensionMismatch(self.m + self.k, self.phi.dim, what="objective")
        if self.graph is not None and self.graph.dim != self.m + self.k:
            raise DimensionMismatch(self.m + self.k, self.graph.dim, what="graph")
        if self.m > 2 or self.k > 2:
            raise DimensionMismatch("1..2", max(self.m, self.k), what="parameter or decision space")

    @property
    def constrained(self) -> bool:
        return self.graph is not None

    def joint(self) -> ConvexFn:
        """phi + indicator of gph G (phi itself when unconstrained)."""
        if self.graph is None:
            return self.phi
        return Sum(self.phi, Indicator(self.graph))

    def feasible(self, XY: np.ndarray) -> np.ndarray:
        if self.graph is None:
            return np.ones(XY.shape[0], dtype=bool)
        return self.graph.member(XY)

    def to_json(self):
        doc = {"phi": self.phi.to_json(), "m": self.m, "k": self.k}
        if self.graph is not None:
            doc["graph"] = self.graph.to_json()
        return doc


@dataclass(frozen=True)
class GammaSplit:
    g1: float
    g2: float

    @property
    def total(self) -> float:
        return self.g1 + self.g2


def gamma_splits(total: float, tol: Tolerances = DEFAULT_TOLERANCES) -> List[GammaSplit]:
    """Uniform samples of {(g1, g2) : g1, g2 >= 0, g1 + g2 = total}, endpoints included."""
    return [GammaSplit(float(g), float(total - g)) for g in tol.gamma_values(total)]


@dataclass(frozen=True, eq=False)
class ValueFnResult:
    x_bar: Tuple[float, ...]
    mu: float
    minimizer_found: bool
    argmin: Optional[Tuple[float, ...]]
    M_eta_samples: Dict[float, np.ndarray]
    window_flagged: bool = False


def x_grid(p: ParametricProblem, tol: Tolerances = DEFAULT_TOLERANCES) -> Grid:
    return tol.primal_grid(p.m)


def y_grid(p: ParametricProblem, tol: Tolerances = DEFAULT_TOLERANCES) -> Grid:
    """Decision grid; in 1D at half the parameter step so that x/2 lands on it."""
    if p.k == 1:
        per_axis = 2 * (tol.primal_grid(1).counts[0] - 1) + 1
        return Grid.window(1, tol.window_radius, per_axis)
    return tol.primal_grid(p.k)


def _objective_rows(p: ParametricProblem, x: np.ndarray, Y: np.ndarray) -> np.ndarray:
    XY = np.hstack([np.broadcast_to(x, (Y.shape[0], p.m)), Y])
    values = p.phi.evaluate(XY)
    return np.where(p.feasible(XY), values, INF)


def _tail_below(p: ParametricProblem, x: np.ndarray, level: float, radius: float) -> bool:
    """Does phi(x, .) drop below level on feasible points past the decision window?"""
    dirs = unit_directions(p.k, 16)
    radii = radius * 2.0 ** np.arange(1, TAIL_STEPS + 1)
    Y = (radii[None, :, None] * dirs[:, None, :]).reshape(-1, p.k)
    with np.errstate(over="ignore", invalid="ignore"):
        values = _objective_rows(p, x, Y)
    return bool(np.any(values < level - 1e-12 * (1.0 + abs(level))))


def optimal_value(
    p: ParametricProblem,
    x,
    grid: Optional[Grid] = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ValueFnResult:
    """mu(x) = inf of phi(x, y) over feasible y, with approximate solution sets.

    mu is the minimum over the decision grid. The minimizer counts as found when
    it is an interior grid point and no feasible point past the window does
    better; otherwise the result is window-flagged.
    """
    x = as_points(x, p.m)[0]
    grid = grid or y_grid(p, tol)
    Y = grid.points()
    values = _objective_rows(p, x, Y)
    if not np.isfinite(values).any():
        logging.info(f"No feasible decision at x={list(x)}; mu = +inf")
        return ValueFnResult(tuple(x), INF, False, None, {eta: np.empty((0, p.k)) for eta in tol.eta_ladder})
    best = int(np.argmin(values))
    mu = float(values[best])
    on_edge = bool(grid.boundary_mask()[best])
    escapes = _tail_below(p, x, mu, grid.radius)
    found = not on_edge and not escapes
    if not found:
        logging.warning(f"Minimizing sequence at x={list(x)} leaves the decision window")
    samples = {eta: Y[values <= mu + eta] for eta in tol.eta_ladder}
    return ValueFnResult(
        x_bar=tuple(float(v) for v in x),
        mu=mu,
        minimizer_found=found,
        argmin=tuple(float(v) for v in Y[best]),
        M_eta_samples=samples,
        window_flagged=not found,
    )


def _tabulate(p: ParametricProblem, X: np.ndarray, Y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Minimum of phi over the rows of Y at each row of X, with the minimizing row index."""
    mu = np.empty(X.shape[0])
    best = np.zeros(X.shape[0], dtype=int)
    for start, stop in iter_chunks(X.shape[0], VALUE_CHUNK):
        rows = X[start:stop]
        XY = np.hstack([np.repeat(rows, Y.shape[0], axis=0), np.tile(Y, (rows.shape[0], 1))])
        values = np.where(p.feasible(XY), p.phi.evaluate(XY), INF).reshape(rows.shape[0], Y.shape[0])
        mu[start:stop] = values.min(axis=1)
        best[start:stop] = values.argmin(axis=1)
    return mu, best


def value_function(p: ParametricProblem, tol: Tolerances = DEFAULT_TOLERANCES) -> Sampled:
    """mu tabulated on the parameter grid, continued affinely past its ends in 1D."""
    key = ("mu", tol)
    if key in p._cache:
        return p._cache[key]
    xg, yg = x_grid(p, tol), y_grid(p, tol)
    X, Y = xg.points(), yg.points()
    logging.info(f"Tabulating the value function on {X.shape[0]} x {Y.shape[0]} grid points")
    mu, _ = _tabulate(p, X, Y)
    if np.isneginf(mu).any():
        raise ValueError("Value function takes -inf on the grid")
    fn = Sampled(xg, mu, extrapolate=p.m == 1, convexity_tol=1e-6)
    p._cache[key] = fn
    return fn


def refined_value_function(p: ParametricProblem, x_bar, tol: Tolerances = DEFAULT_TOLERANCES) -> ConvexFn:
    """mu with extra nodes around x_bar for a 1D parameter; the plain table otherwise.

    The extra nodes sit REFINE_FACTOR times closer than the parameter grid and
    cover REFINE_CELLS grid steps on each side of x_bar. At each one the inner
    minimum is taken again on a decision grid refined by the same factor
    around the coarse minimizer.
    """
    base = value_function(p, tol)
    if p.m != 1:
        return base
    x0 = float(as_points(x_bar, 1)[0][0])
    key = ("mu_refined", x0, tol)
    if key in p._cache:
        return p._cache[key]
    half = REFINE_FACTOR * REFINE_CELLS
    X = (x0 + x_grid(p, tol).max_step / REFINE_FACTOR * np.arange(-half, half + 1)).reshape(-1, 1)
    yg = y_grid(p, tol)
    Y = yg.points()
    mu, best = _tabulate(p, X, Y)
    ticks = yg.max_step / REFINE_FACTOR * np.arange(-half, half + 1)
    local = np.stack(np.meshgrid(*([ticks] * p.k), indexing="ij"), axis=-1).reshape(-1, p.k)
    for i in np.flatnonzero(np.isfinite(mu)):
        Y_local = np.clip(Y[best[i]] + local, -tol.window_radius, tol.window_radius)
        local_mu, _ = _tabulate(p, X[i:i + 1], Y_local)
        mu[i] = min(mu[i], float(local_mu[0]))
    logging.debug(f"Refined mu at {X.shape[0]} parameter nodes around x={x0:g}")
    fn = Refined1D(base, tuple(X[:, 0]), tuple(mu))
    p._cache[key] = fn
    return fn


def _pick(Y: np.ndarray, anchor=None, count: int = MAX_Y_SAMPLES) -> np.ndarray:
    """Decisions sampled from an approximate solution set.

    The anchor and the points extreme along each axis are always kept. Up to
    count more come evenly spaced from the hull vertices of Y in 2D and up,
    or from the sorted rows of Y in 1D.
    """
    if Y.shape[0] == 0:
        return Y
    keep = [] if anchor is None else [np.asarray(anchor, dtype=float).reshape(1, -1)]
    keep.append(Y[np.argmin(Y, axis=0)])
    keep.append(Y[np.argmax(Y, axis=0)])
    boundary = Y
    if Y.shape[1] > 1 and Y.shape[0] > count:
        try:
            boundary = Y[ConvexHull(Y).vertices]
        except QhullError:
            logging.debug(f"Degenerate solution set of {Y.shape[0]} points; sampling its rows")
    if boundary.shape[0] <= count:
        keep.append(boundary)
    else:
        keep.append(boundary[np.unique(np.round(np.linspace(0, boundary.shape[0] - 1, count)).astype(int))])
    return np.unique(np.vstack(keep), axis=0)


class _FormulaTester:
    """Membership of (x*, 0) in the approximate-solution formula terms.

    Unconstrained: (x*, 0) in d_T phi(x_bar, y) iff
    phi*(x*, 0) + phi(x_bar, y) <= <x*, x_bar> + T.
    Constrained: (x*, 0) = u + w with a(u) <= g1 and b(w) <= g2 for a split
    g1 + g2 = T, where a(u) = phi*(u) + phi(p) - <u, p> and
    b(w) = h_gph(w) - <w, p> at p = (x_bar, y).
    """

    def __init__(self, p: ParametricProblem, x_bar: np.ndarray, tol: Tolerances):
        self.p = p
        self.x_bar = x_bar
        self.tol = tol
        self.lattice = tol.split_lattice(p.m + p.k).points() if p.constrained else None

    def _lift(self, X: np.ndarray) -> np.ndarray:
        return np.hstack([X, np.zeros((X.shape[0], self.p.k))])

    def unconstrained_gap(self, X: np.ndarray) -> np.ndarray:
        values, _ = conjugate_at(self.p.phi, self._lift(X), self.tol)
        return values - X @ self.x_bar

    def member(self, X: np.ndarray, y: np.ndarray, total: float, phi_value: float) -> np.ndarray:
        if not self.p.constrained:
            return self.unconstrained_gap(X) + phi_value <= total + self.tol.member_tol
        return self._split_member(X, np.concatenate([self.x_bar, y]), total, phi_value)

    def _a(self, U: np.ndarray, point: np.ndarray, phi_value: float) -> np.ndarray:
        values, _ = conjugate_at(self.p.phi, U, self.tol)
        return values + phi_value - U @ point

    def _b(self, W: np.ndarray, point: np.ndarray) -> np.ndarray:
        values, _ = self.p.graph.support(W, self.tol)
        return values - W @ point

    def _split_member(self, X: np.ndarray, point: np.ndarray, total: float, phi_value: float) -> np.ndarray:
        tol = self.tol
        splits = np.array([s.g1 for s in gamma_splits(total, tol)])
        slack = tol.member_tol
        lattice = self.lattice
        a_lat = self._a(lattice, point, phi_value)
        b_lat = self._b(lattice, point)
        U = lattice[a_lat <= total + slack]
        a_U = a_lat[a_lat <= total + slack]
        W = lattice[b_lat <= total + slack]
        b_W = b_lat[b_lat <= total + slack]
        targets = self._lift(X)
        found = np.zeros(X.shape[0], dtype=bool)
        for side, anchors, known in (("phi", U, a_U), ("set", W, b_W)):
            if anchors.shape[0] == 0:
                continue
            rows = max(1, SPLIT_BATCH // anchors.shape[0])
            for start, stop in iter_chunks(X.shape[0], rows):
                block = targets[start:stop]
                other = (block[:, None, :] - anchors[None, :, :]).reshape(-1, block.shape[1])
                if side == "phi":
                    a = np.broadcast_to(known, (block.shape[0], known.size)).ravel()
                    b = self._b(other, point)
                else:
                    a = self._a(other, point, phi_value)
                    b = np.broadcast_to(known, (block.shape[0], known.size)).ravel()
                # some split value s with a <= s <= total - b
                idx = np.searchsorted(splits, a - slack, side="left")
                ok = idx < splits.size
                s = splits[np.minimum(idx, splits.size - 1)]
                ok &= s <= total - b + slack
                found[start:stop] |= ok.reshape(block.shape[0], -1).any(axis=1)
        return found


def _formula_sets(p: ParametricProblem, x_bar, eps: float, tol: Tolerances) -> Tuple[DualSet, DualSet, List]:
    """Meta and union formula sets plus their per-ladder-step terms.

    Each ladder step eta contributes, for the meta set, the intersection over
    sampled y in M_eta and, for the union set, the union over sampled y with
    phi(x_bar, y) <= mu + eps + eta. The ladder is closed by eta = 0 on the
    grid solution set.
    """
    x_bar = as_points(x_bar, p.m)[0]
    result = optimal_value(p, x_bar, tol=tol)
    if not np.isfinite(result.mu):
        raise ValueError(f"mu is +inf at {list(x_bar)}")
    tester = _FormulaTester(p, x_bar, tol)
    Y = y_grid(p, tol).points()
    phi_values = _objective_rows(p, x_bar, Y)

    steps = []
    for eta in tuple(tol.eta_ladder) + (0.0,):
        total = eps + eta
        if eta > 0:
            meta_ys = _pick(result.M_eta_samples[eta], result.argmin)
        else:
            meta_ys = _pick(Y[phi_values <= result.mu + tol.member_tol], result.argmin)
        union_ys = _pick(Y[phi_values <= result.mu + total + tol.member_tol], result.argmin)
        meta_terms = [(y, float(_objective_rows(p, x_bar, y[None, :])[0])) for y in meta_ys]
        union_terms = [(y, float(_objective_rows(p, x_bar, y[None, :])[0])) for y in union_ys]
        steps.append((eta, total, meta_terms, union_terms))
        logging.debug(f"eta={eta:g}: {len(meta_terms)} meta and {len(union_terms)} union decisions")

    def meta_step(X, total, terms):
        inside = np.ones(X.shape[0], dtype=bool)
        for y, value in terms:
            rows = np.flatnonzero(inside)
            if rows.size == 0:
                break
            inside[rows] = tester.member(X[rows], y, total, value)
        return inside

    def union_step(X, total, terms):
        inside = np.zeros(X.shape[0], dtype=bool)
        for y, value in terms:
            rows = np.flatnonzero(~inside)
            if rows.size == 0:
                break
            inside[rows] = tester.member(X[rows], y, total, value)
        return inside

    def make(step_fn, which):
        def membership(X):
            inside = np.ones(X.shape[0], dtype=bool)
            for eta, total, meta_terms, union_terms in steps:
                rows = np.flatnonzero(inside)
                if rows.size == 0:
                    break
                terms = meta_terms if which == "meta" else union_terms
                inside[rows] = step_fn(X[rows], total, terms)
            return inside
        return membership

    meta = DualSet(p.m, chunked_membership(make(meta_step, "meta")), label="formula meta")
    union = DualSet(p.m, chunked_membership(make(union_step, "union")), label="formula union")
    term_fns = {"meta": (meta_step, [(s[0], s[1], s[2]) for s in steps]),
                "union": (union_step, [(s[0], s[1], s[3]) for s in steps])}
    return meta.finalize(tol), union.finalize(tol), term_fns


def _direct(p: ParametricProblem, x_bar, eps: float, tol: Tolerances) -> DualSet:
    return eps_subdiff_set(EpsSubdiffQuery(refined_value_function(p, x_bar, tol), x_bar, eps, tol))


def unconstrained_eps_subdiff(p: ParametricProblem, x_bar, eps: float, tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, object]:
    """d_eps mu(x_bar) directly and by the two approximate-solution formulas."""
    if p.constrained:
        raise ValueError("Problem has a constraint graph; use constrained_eps_subdiff")
    logging.info(f"Unconstrained value-function subdifferential at x={list(np.ravel(x_bar))}, eps={eps:g}")
    direct = _direct(p, x_bar, eps, tol)
    meta, union, _ = _formula_sets(p, x_bar, eps, tol)
    return _report(direct, meta, union, tol)


def _report(direct: DualSet, meta: DualSet, union: DualSet, tol: Tolerances) -> Dict[str, object]:
    errors = {
        "direct_vs_meta": hausdorff_on_window(direct, meta, tol),
        "direct_vs_union": hausdorff_on_window(direct, union, tol),
        "meta_vs_union": hausdorff_on_window(meta, union, tol),
    }
    agree = all(equal_on_window(a, b, tol) for a, b in ((direct, meta), (direct, union), (meta, union)))
    return {
        "direct": direct,
        "formula_meta": meta,
        "formula_union": union,
        "agree": bool(agree),
        "hausdorff_error": float(max(errors.values())),
        "errors": errors,
    }


def single_solution_set(p: ParametricProblem, x_bar, eps: float, y_sol, tol: Tolerances = DEFAULT_TOLERANCES) -> DualSet:
    """{x* : (x*, 0) in d_eps phi(x_bar, y_sol)} for a solution y_sol of the inner problem."""
    x_bar = as_points(x_bar, p.m)[0]
    y_sol = as_points(y_sol, p.k)[0]
    result = optimal_value(p, x_bar, tol=tol)
    value = float(_objective_rows(p, x_bar, y_sol[None, :])[0])
    if not value <= result.mu + tol.set_tol:
        raise NotASolution(f"phi(x_bar, {list(y_sol)}) = {value:.6g} exceeds mu = {result.mu:.6g}")
    tester = _FormulaTester(p, x_bar, tol)

    def membership(X):
        return tester.member(X, y_sol, eps, value)

    return DualSet(p.m, chunked_membership(membership), label="single solution").finalize(tol)


def eps_subdiff_value_exact(p: ParametricProblem, x_bar, eps: float = 0.0, y_sol=None, tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, object]:
    """d_eps mu(x_bar) through one exact solution y_sol of the inner problem.

    Without y_sol the grid minimizer is used, which must be an interior point
    not beaten past the window. At eps = 0 this is
    d mu(x_bar) = {x* : (x*, 0) in d phi(x_bar, y_sol)}.
    """
    if y_sol is None:
        result = optimal_value(p, x_bar, tol=tol)
        if not result.minimizer_found:
            raise NotASolution(f"No minimizer of the inner problem found at x={list(np.ravel(x_bar))}")
        y_sol = result.argmin
    single = single_solution_set(p, x_bar, eps, y_sol, tol)
    direct = _direct(p, x_bar, eps, tol)
    return {
        "direct": direct,
        "single": single,
        "y_sol": tuple(float(v) for v in as_points(y_sol, p.k)[0]),
        "agree": equal_on_window(single, direct, tol),
        "hausdorff_error": hausdorff_on_window(single, direct, tol),
    }


def unconstrained_solution_case(p: ParametricProblem, x_bar, eps: float, y_sol, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """Does the single-solution formula reproduce d_eps mu(x_bar)?"""
    return bool(eps_subdiff_value_exact(p, x_bar, eps, y_sol, tol)["agree"])


def regularity_report(p: ParametricProblem, tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, object]:
    """Which constraint qualifications hold for the pair (phi, gph G)."""
    graph = p.graph if p.graph is not None else FullSpace(p.m + p.k)
    report = {key: None for key in REGULARITY_LABELS}
    try:
        dom = p.phi.domain()
        report["a"] = interior_meets(graph, dom)
        report["b"] = interior_meets(dom, graph)
        report["i"] = relative_interiors_meet(dom, graph)
        report["ii"] = difference_has_zero_interior(dom, graph, tol)
    except UnsupportedDomainShape as e:
        logging.warning(f"Regularity undecidable for this problem: {e}")
    certified = any(report[key] for key in REGULARITY_LABELS)
    report["state"] = "CERTIFIED" if certified else "UNCERTIFIED"
    if not certified:
        logging.warning("No constraint qualification verified; formula sets are UNCERTIFIED")
    return report


def constrained_eps_subdiff(p: ParametricProblem, x_bar, eps: float, tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, object]:
    """d_eps mu(x_bar) directly and by the constrained approximate-solution formulas."""
    if not p.constrained:
        raise ValueError("Problem has no constraint graph; use unconstrained_eps_subdiff")
    logging.info(f"Constrained value-function subdifferential at x={list(np.ravel(x_bar))}, eps={eps:g}")
    regularity = regularity_report(p, tol)
    direct = _direct(p, x_bar, eps, tol)
    meta, union, _ = _formula_sets(p, x_bar, eps, tol)
    report = _report(direct, meta, union, tol)
    report["regularity"] = regularity
    return report


def eta_convergence_table(p: ParametricProblem, x_bar, eps: float, which: str = "meta", tol: Tolerances = DEFAULT_TOLERANCES) -> pd.DataFrame:
    """Partial intersections over the eta ladder, then the closed set.

    Row j holds the set after intersecting the first j + 1 ladder terms
    (stage "ladder"); the last row adds the eta = 0 term (stage "closed"), so
    the row before it is the ladder-only answer. members counts dual-grid
    members, lo and hi are the 1D interval ends (NaN in 2D and up) and
    hausdorff_change is the distance to the previous row's members.
    """
    _, _, term_fns = _formula_sets(p, x_bar, eps, tol)
    step_fn, steps = term_fns[which]
    X = tol.dual_grid(p.m).points()
    inside = np.ones(X.shape[0], dtype=bool)
    previous = None
    rows = []
    for j, (eta, total, terms) in enumerate(steps):
        candidates = np.flatnonzero(inside)
        if candidates.size:
            inside[candidates] = step_fn(X[candidates], total, terms)
        members = X[inside]
        lo = hi = np.nan
        if p.m == 1:
            interval = _prefix_set(step_fn, steps[:j + 1], p.m).interval(tol)
            if not interval.is_empty:
                lo, hi = interval.lo, interval.hi
        change = np.nan if previous is None else cloud_hausdorff(previous, members)
        rows.append({
            "eta": eta,
            "stage": "closed" if eta == 0 else "ladder",
            "members": int(inside.sum()),
            "lo": lo,
            "hi": hi,
            "hausdorff_change": change,
        })
        previous = members
    table = pd.DataFrame(rows, columns=["eta", "stage", "members", "lo", "hi", "hausdorff_change"])
    logging.info(f"eta convergence ({which}):\n{table.to_string(index=False)}")
    return table


def _prefix_set(step_fn, steps, dim: int) -> DualSet:
    def membership(X):
        inside = np.ones(X.shape[0], dtype=bool)
        for _, total, terms in steps:
            rows = np.flatnonzero(inside)
            if rows.size == 0:
                break
            inside[rows] = step_fn(X[rows], total, terms)
        return inside

    return DualSet(dim, chunked_membership(membership), label=f"first {len(steps)} eta terms")


def reduction_identity_check(
    p: ParametricProblem,
    dual_grid: Optional[Grid] = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> Dict[str, object]:
    """Compare mu*(v*) with (phi + indicator of gph G)*(v*, 0) on the dual grid.

    Only dual points where the joint conjugate is not cut off by the window are
    compared.
    """
    dual_grid = dual_grid or tol.dual_grid(p.m)
    V = dual_grid.points()
    mu = value_function(p, tol)
    lhs, lhs_flags = conjugate_at(mu, V, tol)
    lifted = np.hstack([V, np.zeros((V.shape[0], p.k))])
    rhs, rhs_flags = conjugate_at(p.joint(), lifted, tol)
    sweep_grid = tol.primal_grid(p.m + p.k)
    conj_tol = tol.conj_tol(sweep_grid, dual_grid.radius)
    decided = ~(lhs_flags | rhs_flags)
    both_inf = np.isinf(lhs) & np.isinf(rhs)
    with np.errstate(invalid="ignore"):
        gap = np.where(both_inf, 0.0, np.abs(lhs - rhs))
    bad = decided & ~(gap <= conj_tol)
    comparable = decided & np.isfinite(gap)
    worst = float(gap[comparable].max()) if comparable.any() else 0.0
    if bad.any():
        logging.warning(f"Reduction identity fails at {int(bad.sum())} dual points")
    return {"holds": not bool(bad.any()), "max_gap": worst, "conj_tol": conj_tol, "compared": int(decided.sum())}
