"""Conjugates, biconjugates, infimal convolution and sum-rule qualification checks."""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from src.errors import DimensionMismatch, WindowTooSmall
from src.functions import ConjugateOf, ConvexFn, Sampled, Sum
from src.numerics import (
    DEFAULT_TOLERANCES,
    INF,
    Grid,
    Tolerances,
    as_points,
    ext_add_arrays,
    iter_chunks,
    legendre_1d,
    unit_directions,
)

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

SWEEP_CHUNK = 128

# ray march of the infimal convolution tail: radii R * 2**k
TAIL_STEPS = 40
# a tail this far below the grid minimum counts as divergence to -inf
DIVERGENCE_GAP = 1e6

# interior radius below which an LP certificate is read as "no interior"
INTERIOR_ATOL = 1e-9

REGULARITY_CONDITIONS = {
    "mr": "one function is continuous at a point of the other's domain",
    "ab": "the cone generated by dom f1 - dom f2 is a closed subspace",
    "bs": "0 is an interior point of dom f1 - dom f2",
}


@dataclass(frozen=True, eq=False)
class ConjugateResult:
    """Conjugate of f: closed form when known, window sweep always.

    attainment_map holds the primal maximizer for each dual grid point, with
    NaN rows where the supremum ran into the window boundary.
    """
    closed_form: Optional[ConvexFn]
    sampled: Sampled
    attainment_map: np.ndarray
    window_flagged: bool = False
    flagged_points: Optional[np.ndarray] = None


@dataclass(frozen=True)
class InfConvCertificate:
    value: float
    split: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]]
    attained: bool

    def to_json(self):
        split = None if self.split is None else [list(self.split[0]), list(self.split[1])]
        value = None if not np.isfinite(self.value) else self.value
        return {"value": value, "value_sign": int(np.sign(self.value)), "split": split, "attained": self.attained}


def _finite_samples(f: ConvexFn, grid: Grid):
    points = grid.points()
    fx = f.evaluate(points)
    finite = np.isfinite(fx)
    if not finite.any():
        raise ValueError("Function is +inf on the whole primal window")
    return points[finite], fx[finite], grid.boundary_mask()[finite]


def sweep_conjugate(f: ConvexFn, S: np.ndarray, grid: Grid) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """max over grid points of <s, x> - f(x) for every row of S.

    Returns (values, maximizers, boundary flags).
    """
    points, fx, on_edge = _finite_samples(f, grid)
    if grid.dim == 1:
        values, best = legendre_1d(points[:, 0], fx, S[:, 0])
        return values, points[best], on_edge[best]
    values = np.empty(S.shape[0])
    best = np.empty(S.shape[0], dtype=int)
    for start, stop in iter_chunks(S.shape[0], SWEEP_CHUNK):
        scores = S[start:stop] @ points.T - fx[None, :]
        idx = scores.argmax(axis=1)
        values[start:stop] = scores[np.arange(stop - start), idx]
        best[start:stop] = idx
    return values, points[best], on_edge[best]


def conjugate(
    f: ConvexFn,
    dual_grid: Optional[Grid] = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
    strict: bool = False,
) -> ConjugateResult:
    """f*(x*) = sup_x <x*, x> - f(x), closed form where known and by window sweep."""
    dual_grid = dual_grid or tol.dual_grid(f.dim)
    if dual_grid.dim != f.dim:
        raise DimensionMismatch(f.dim, dual_grid.dim, what="dual grid")
    logging.info(f"Computing conjugate of {type(f).__name__} on a dual grid of {dual_grid.size} points")
    S = dual_grid.points()
    values, argmax, flags = sweep_conjugate(f, S, tol.primal_grid(f.dim))
    attainment = np.where(flags[:, None], np.nan, argmax)
    if flags.any():
        logging.warning(f"Conjugate supremum reached the window boundary at {int(flags.sum())} dual points")
        if strict:
            raise WindowTooSmall("Conjugate maximizer on the window boundary", points=S[flags])
    sampled = Sampled(dual_grid, values, convexity_tol=1e-7)
    closed = ConjugateOf(f) if f.has_closed_conjugate else None
    return ConjugateResult(
        closed_form=closed,
        sampled=sampled,
        attainment_map=attainment,
        window_flagged=bool(flags.any()),
        flagged_points=S[flags],
    )


def conjugate_at(f: ConvexFn, x_star, tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[np.ndarray, np.ndarray]:
    """f* at the rows of x_star with window flags (closed form is never flagged)."""
    S = as_points(x_star, f.dim)
    closed = f.conjugate_values(S)
    if closed is not None:
        return closed, np.zeros(S.shape[0], dtype=bool)
    values, _, flags = sweep_conjugate(f, S, tol.primal_grid(f.dim))
    return values, flags


def conjugate_function(f: ConvexFn, tol: Tolerances = DEFAULT_TOLERANCES) -> ConvexFn:
    """f* as a ConvexFn: the closed form when there is one, else the sampled sweep."""
    if f.has_closed_conjugate:
        return ConjugateOf(f)
    return conjugate(f, tol=tol).sampled


def _biconjugate_dual_axis(fx: np.ndarray, x: np.ndarray, tol: Tolerances) -> np.ndarray:
    """Dual window wide enough for the interior slopes of the samples."""
    step = tol.dual_grid(1).max_step
    slopes = np.diff(fx) / np.diff(x)
    inner = slopes[1:-1] if slopes.size > 2 else slopes
    reach = max(tol.window_radius, float(np.abs(inner).max()) if inner.size else 0.0)
    half = int(np.ceil(reach / step))
    return np.arange(-half, half + 1) * step


def biconjugate(f: ConvexFn, grid: Optional[Grid] = None, tol: Tolerances = DEFAULT_TOLERANCES) -> Sampled:
    """f** on the primal grid, by two passes of the discrete transform.

    The dual window covers the interior slopes of f but not a jump at the end
    of the domain, so f** of a non-closed f drops to its closure there. In 1D
    f** is +inf off the closed hull of the finite samples; above 1D it is the
    dual-window envelope and finite everywhere.
    """
    grid = grid or tol.primal_grid(f.dim)
    logging.info(f"Computing biconjugate of {type(f).__name__} on {grid.size} primal points")
    if f.dim == 1:
        x = grid.axis_points(0)
        fx = f.evaluate(x.reshape(-1, 1))
        finite = np.isfinite(fx)
        if not finite.any():
            raise ValueError("Function is +inf on the whole primal window")
        xf, ff = x[finite], fx[finite]
        s = _biconjugate_dual_axis(ff, xf, tol)
        g, _ = legendre_1d(xf, ff, s)
        values, _ = legendre_1d(s, g, x)
        values = np.where((x >= xf[0]) & (x <= xf[-1]), values, INF)
        return Sampled(grid, values, convexity_tol=1e-7)
    dual = tol.dual_grid(f.dim)
    S = dual.points()
    g, _, _ = sweep_conjugate(f, S, grid)
    X = grid.points()
    values = np.empty(X.shape[0])
    for start, stop in iter_chunks(X.shape[0], SWEEP_CHUNK):
        values[start:stop] = (X[start:stop] @ S.T - g[None, :]).max(axis=1)
    return Sampled(grid, values, convexity_tol=1e-7)


def _tail_values(f1: ConvexFn, f2: ConvexFn, x: np.ndarray, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    """f1(r d) + f2(x - r d) along rays r = R 2**k for every sample direction d."""
    dirs = unit_directions(x.size, 16)
    radii = radius * 2.0 ** np.arange(1, TAIL_STEPS + 1)
    X1 = (radii[None, :, None] * dirs[:, None, :]).reshape(-1, x.size)
    with np.errstate(over="ignore", invalid="ignore"):
        values = ext_add_arrays(f1.evaluate(X1), f2.evaluate(x[None, :] - X1))
    return values.reshape(dirs.shape[0], TAIL_STEPS), X1.reshape(dirs.shape[0], TAIL_STEPS, x.size)


def inf_convolution(
    f1: ConvexFn,
    f2: ConvexFn,
    x,
    grid: Optional[Grid] = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> InfConvCertificate:
    """(f1 + f2 infimal convolution)(x) = inf over x1 + x2 = x of f1(x1) + f2(x2).

    Candidate x1 are the grid points and x minus the grid points, so either
    summand may sit on the lattice. A ray march past the window catches
    divergence to -inf and infima approached at infinity.
    """
    if f1.dim != f2.dim:
        raise DimensionMismatch(f1.dim, f2.dim, what="convolved function")
    x = as_points(x, f1.dim)[0]
    grid = grid or tol.primal_grid(f1.dim)
    points = grid.points()
    edge = grid.boundary_mask()
    candidates = np.vstack([points, x[None, :] - points])
    on_edge = np.concatenate([edge, edge])
    values = ext_add_arrays(f1.evaluate(candidates), f2.evaluate(x[None, :] - candidates))
    best = int(np.argmin(values))
    grid_min = float(values[best])

    tail, tail_points = _tail_values(f1, f2, x, grid.radius)
    finite_tail = np.where(np.isfinite(tail), tail, INF)
    tail_min = float(finite_tail.min())
    if np.isfinite(tail_min):
        reference = grid_min if np.isfinite(grid_min) else 0.0
        ray, k = np.unravel_index(int(np.argmin(finite_tail)), finite_tail.shape)
        run = finite_tail[ray]
        decreasing = np.all(np.diff(run[-10:]) < 0)
        if decreasing and run[-1] < reference - DIVERGENCE_GAP * (1.0 + abs(reference)):
            logging.info(f"Infimal convolution at {list(x)} diverges to -inf")
            return InfConvCertificate(value=-INF, split=None, attained=False)

    if not np.isfinite(grid_min) and not np.isfinite(tail_min):
        return InfConvCertificate(value=INF, split=None, attained=False)
    value = min(grid_min, tail_min)
    attained = (
        np.isfinite(grid_min)
        and not on_edge[best]
        and tail_min >= grid_min - tol.set_tol
    )
    if attained:
        x1 = candidates[best]
        split = (tuple(float(v) for v in x1), tuple(float(v) for v in x - x1))
    elif grid_min <= tail_min:
        x1 = candidates[best]
        split = (tuple(float(v) for v in x1), tuple(float(v) for v in x - x1))
    else:
        x1 = tail_points[ray, k]
        split = (tuple(float(v) for v in x1), tuple(float(v) for v in x - x1))
    logging.debug(f"Infimal convolution at {list(x)}: value {value:.6g}, attained {attained}")
    return InfConvCertificate(value=value, split=split, attained=bool(attained))


def check_condition_H(
    f1: ConvexFn,
    f2: ConvexFn,
    x_star,
    grid: Optional[Grid] = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> Dict[str, object]:
    """Does (f1 + f2)* equal the exact infimal convolution of f1* and f2* at x_star?

    holds_as_inf compares the values; attained reports whether the
    infimum over dual splits is reached. The qualification condition is
    their conjunction.
    """
    x_star = as_points(x_star, f1.dim)[0]
    logging.info(f"Checking the conjugate sum condition for {type(f1).__name__} + {type(f2).__name__} at {list(x_star)}")
    lhs, flags = conjugate_at(Sum(f1, f2), x_star, tol)
    certificate = inf_convolution(conjugate_function(f1, tol), conjugate_function(f2, tol), x_star, grid, tol)
    lhs_value, rhs_value = float(lhs[0]), certificate.value
    if np.isinf(lhs_value) or np.isinf(rhs_value):
        holds = lhs_value == rhs_value
    else:
        holds = abs(lhs_value - rhs_value) <= tol.set_tol
    if flags[0]:
        logging.warning(f"(f1 + f2)* at {list(x_star)} rests on a clipped window")
    return {
        "holds_as_inf": bool(holds),
        "attained": bool(certificate.attained),
        "condition": bool(holds and certificate.attained),
        "lhs": lhs_value,
        "certificate": certificate,
        "window_flagged": bool(flags[0]),
    }


def _interior_radius(
    A_pad: np.ndarray,
    b_pad: np.ndarray,
    A_eq: Optional[np.ndarray] = None,
    b_eq: Optional[np.ndarray] = None,
    A_plain: Optional[np.ndarray] = None,
    b_plain: Optional[np.ndarray] = None,
) -> Optional[float]:
    """max r <= 1 with A_pad x + r |a_i| <= b_pad, A_eq x = b_eq, A_plain x <= b_plain.

    None when the constraints have no solution at all.
    """
    n = next(M.shape[1] for M in (A_pad, A_eq, A_plain) if M is not None)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    rows, rhs = [], []
    if A_pad.shape[0]:
        rows.append(np.hstack([A_pad, np.linalg.norm(A_pad, axis=1)[:, None]]))
        rhs.append(b_pad)
    if A_plain is not None and A_plain.shape[0]:
        rows.append(np.hstack([A_plain, np.zeros((A_plain.shape[0], 1))]))
        rhs.append(b_plain)
    kwargs = {}
    if rows:
        kwargs.update(A_ub=np.vstack(rows), b_ub=np.concatenate(rhs))
    if A_eq is not None and A_eq.shape[0]:
        kwargs.update(A_eq=np.hstack([A_eq, np.zeros((A_eq.shape[0], 1))]), b_eq=b_eq)
    result = linprog(c, bounds=[(None, None)] * n + [(0, 1.0)], method="highs", **kwargs)
    if result.status != 0:
        return None
    return float(result.x[-1])


def _implicit_equalities(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rows of A x <= b that hold with equality on the whole polyhedron."""
    tight = np.zeros(A.shape[0], dtype=bool)
    for i, row in enumerate(A):
        result = linprog(row, A_ub=A, b_ub=b, bounds=[(None, None)] * A.shape[1], method="highs")
        if result.status == 0 and result.fun >= b[i] - INTERIOR_ATOL * (1.0 + abs(b[i])):
            tight[i] = True
    return tight


def _relative_interiors_meet(A1, b1, A2, b2) -> bool:
    tight1, tight2 = _implicit_equalities(A1, b1), _implicit_equalities(A2, b2)
    A_eq = np.vstack([A1[tight1], A2[tight2]])
    b_eq = np.concatenate([b1[tight1], b2[tight2]])
    A_pad = np.vstack([A1[~tight1], A2[~tight2]])
    b_pad = np.concatenate([b1[~tight1], b2[~tight2]])
    radius = _interior_radius(A_pad, b_pad, A_eq=A_eq, b_eq=b_eq)
    return radius is not None and radius > INTERIOR_ATOL


def interior_meets(inner, other) -> bool:
    """int(inner) meets other, for polyhedral set descriptions."""
    A1, b1 = inner.halfspaces()
    A2, b2 = other.halfspaces()
    radius = _interior_radius(A1, b1, A_plain=A2, b_plain=b2)
    return radius is not None and radius > INTERIOR_ATOL


def relative_interiors_meet(D1, D2) -> bool:
    """ri D1 meets ri D2, for polyhedral set descriptions."""
    A1, b1 = D1.halfspaces()
    A2, b2 = D2.halfspaces()
    return _relative_interiors_meet(A1, b1, A2, b2)


def difference_has_zero_interior(D1, D2, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """0 in int(D1 - D2): h_D1(d) + h_D2(-d) >= set_tol along every sample direction."""
    dirs = unit_directions(D1.dim, tol.support_dirs)
    h1, _ = D1.support(dirs, tol)
    h2, _ = D2.support(-dirs, tol)
    return bool(np.all(ext_add_arrays(h1, h2) >= tol.set_tol))


def check_regularity(f1: ConvexFn, f2: ConvexFn, tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, bool]:
    """Decide the three domain qualification conditions for a sum f1 + f2.

    Domains must be polyhedral (halfspace-describable); anything else raises
    UnsupportedDomainShape.
    """
    if f1.dim != f2.dim:
        raise DimensionMismatch(f1.dim, f2.dim, what="summand")
    D1, D2 = f1.domain(), f2.domain()
    logging.info(f"Checking regularity of {type(f1).__name__} + {type(f2).__name__} in dimension {f1.dim}")
    mr = interior_meets(D1, D2) or interior_meets(D2, D1)
    ab = relative_interiors_meet(D1, D2)
    bs = difference_has_zero_interior(D1, D2, tol)
    verdicts = {"mr": bool(mr), "ab": bool(ab), "bs": bool(bs)}
    if not verdicts_consistent(verdicts):
        logging.warning(f"Regularity verdicts {verdicts} break the known implications")
    return verdicts


def regularity_implication_graph() -> nx.DiGraph:
    """Known implications between the qualification conditions."""
    G = nx.DiGraph()
    for name, description in REGULARITY_CONDITIONS.items():
        G.add_node(name, description=description)
    G.add_edge("mr", "bs")
    G.add_edge("bs", "ab")
    G.add_edge("mr", "ab")
    return G


def verdicts_consistent(verdicts: Dict[str, bool]) -> bool:
    """True when no implication edge leads from a true verdict to a false one."""
    G = regularity_implication_graph()
    for source, target in G.edges():
        if verdicts.get(source) and verdicts.get(target) is False:
            return False
    return True
