"""Epsilon-subdifferentials and their calculus rules.

Two independent routes describe the set: the conjugate test
f*(x*) + f(x_bar) <= <x*, x_bar> + eps decides membership, and the
directional support formula inf_t [f(x_bar + t v) - f(x_bar) + eps] / t
gives the interval (1D) or support samples (nD). The rules below compare
the sets they produce on the dual window.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from src.dual_sets import (
    DualSet,
    chunked_membership,
    equal_on_window,
    hausdorff_on_window,
    interval_set,
    minkowski_sum,
    subset_on_grid,
    union,
)
from src.errors import WindowTooSmall
from src.functions import ConvexFn, Scale, Separable, Sum
from src.numerics import (
    DEFAULT_TOLERANCES,
    EMPTY,
    INF,
    T_GRID_HI,
    T_GRID_LO,
    Tolerances,
    XInterval,
    as_points,
    t_grid,
    unit_directions,
)
from src.sets import Epigraph, eps_normal_set
from src.transforms import check_condition_H, conjugate_at

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

# the t search may leave the log grid by three decades when the infimum sits at its edge
T_EDGE_LO = T_GRID_LO * 1e-3
T_EDGE_HI = T_GRID_HI * 1e3

# finite stand-in for +inf inside the scalar minimizer
_BIG = 1e300


@dataclass(frozen=True)
class EpsSubdiffQuery:
    f: ConvexFn
    x_bar: Tuple[float, ...]
    eps: float
    tol: Tolerances = DEFAULT_TOLERANCES
    f_bar: float = field(init=False)

    def __post_init__(self):
        x_bar = tuple(float(v) for v in as_points(self.x_bar, self.f.dim)[0])
        object.__setattr__(self, "x_bar", x_bar)
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        value = float(self.f.evaluate(np.asarray([x_bar]))[0])
        if not np.isfinite(value):
            raise ValueError(f"f is not finite at {list(x_bar)}")
        object.__setattr__(self, "f_bar", value)

    @property
    def point(self) -> np.ndarray:
        return np.asarray(self.x_bar, dtype=float)


def _conjugate_test(q: EpsSubdiffQuery, eps: float) -> Tuple[Callable, Callable]:
    """Membership and unresolved predicates of the conjugate test at level eps."""
    x_bar = q.point

    def excess(X):
        values, flags = conjugate_at(q.f, X, q.tol)
        return values + q.f_bar - X @ x_bar, flags

    def test(X):
        gap, _ = excess(X)
        return gap <= eps + q.tol.member_tol

    def unresolved(X):
        gap, flags = excess(X)
        return flags & (gap <= eps + q.tol.member_tol)

    return test, unresolved


def eps_subdiff_membership(q: EpsSubdiffQuery, x_star, strict: bool = False):
    """Is x_star in the eps-subdifferential? A bool for one point, an array for a batch."""
    X = as_points(x_star, q.f.dim)
    test, unresolved = _conjugate_test(q, q.eps)
    if strict:
        doubtful = unresolved(X)
        if doubtful.any():
            raise WindowTooSmall("Membership rests on a conjugate cut off by the window", points=X[doubtful])
    inside = test(X)
    return bool(inside[0]) if X.shape[0] == 1 else inside


def _quotient(f: ConvexFn, x_bar: np.ndarray, f_bar: float, eps: float, v: np.ndarray, T: np.ndarray) -> np.ndarray:
    points = x_bar[None, :] + T[:, None] * v[None, :]
    with np.errstate(over="ignore", invalid="ignore"):
        values = f.evaluate(points)
    return np.where(np.isfinite(values), (values - f_bar + eps) / T, INF)


def directional_support(f: ConvexFn, x_bar, f_bar: float, eps: float, v, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """inf over t > 0 of [f(x_bar + t v) - f(x_bar) + eps] / t.

    Sampled on the logarithmic t-grid and refined around the best sample by a
    bounded scalar search in log t. At eps = 0 the quotient is nondecreasing in
    t, so a quotient still falling at the smallest t means -inf.
    """
    x_bar = np.asarray(x_bar, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    T = t_grid()
    q = _quotient(f, x_bar, f_bar, eps, v, T)
    if not np.isfinite(q).any():
        return INF
    i = int(np.argmin(q))
    lo = np.log(T_EDGE_LO) if i == 0 else np.log(T[i - 1])
    hi = np.log(T_EDGE_HI) if i == T.size - 1 else np.log(T[i + 1])

    def objective(u):
        value = _quotient(f, x_bar, f_bar, eps, v, np.array([np.exp(u)]))[0]
        return min(value, _BIG)

    result = minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    best = min(float(q[i]), float(result.fun))
    if eps == 0 and i == 0:
        edge = _quotient(f, x_bar, f_bar, eps, v, np.array([T_EDGE_LO]))[0]
        if edge < q[0] - tol.set_tol:
            return -INF
    return best


def support_formula_interval(f: ConvexFn, x_bar, f_bar: float, eps: float, tol: Tolerances = DEFAULT_TOLERANCES) -> XInterval:
    """[-h(-1), h(+1)] from the directional support formula (1D)."""
    h_plus = directional_support(f, x_bar, f_bar, eps, [1.0], tol)
    h_minus = directional_support(f, x_bar, f_bar, eps, [-1.0], tol)
    if h_plus == -INF or h_minus == -INF:
        return EMPTY
    lo, hi = -h_minus, h_plus
    if lo > hi + tol.member_tol:
        return EMPTY
    return XInterval(lo, max(lo, hi))


def support_formula_samples(f: ConvexFn, x_bar, f_bar: float, eps: float, tol: Tolerances = DEFAULT_TOLERANCES):
    dirs = unit_directions(f.dim, tol.support_dirs)
    values = np.array([directional_support(f, x_bar, f_bar, eps, d, tol) for d in dirs])
    return dirs, values


def eps_subdiff_set(q: EpsSubdiffQuery) -> DualSet:
    """The eps-subdifferential of f at x_bar as a DualSet."""
    logging.info(f"Computing {q.eps:g}-subdifferential of {type(q.f).__name__} at {list(q.x_bar)}")
    test, unresolved = _conjugate_test(q, q.eps)
    if q.f.dim == 1:
        interval = support_formula_interval(q.f, q.point, q.f_bar, q.eps, q.tol)
        dset = DualSet(1, chunked_membership(test), interval_1d=interval, unresolved=unresolved, label=f"d_{q.eps:g}f")
    else:
        samples = support_formula_samples(q.f, q.point, q.f_bar, q.eps, q.tol)
        dset = DualSet(q.f.dim, chunked_membership(test), support_samples=samples, unresolved=unresolved, label=f"d_{q.eps:g}f")
    return dset.finalize(q.tol)


def subdiff_via_eps_intersection(f: ConvexFn, x_bar, tol: Tolerances = DEFAULT_TOLERANCES, close: bool = True) -> DualSet:
    """The exact subdifferential as the intersection over the eta ladder of eta-subdifferentials.

    With close set, the ladder is closed by the eps = 0 conjugate test, which
    the intersection reaches in the limit. Without it the result is the
    ladder-only set, which is the eta-subdifferential for the smallest eta.
    """
    q = EpsSubdiffQuery(f, x_bar, 0.0, tol)
    logging.info(f"Intersecting {len(tol.eta_ladder)} eta-subdifferentials of {type(f).__name__} at {list(q.x_bar)}")
    tests = [_conjugate_test(q, eta)[0] for eta in tol.eta_ladder]
    if close:
        closing, _ = _conjugate_test(q, 0.0)
        tests.append(closing)

    def membership(X):
        inside = np.ones(X.shape[0], dtype=bool)
        for test in tests:
            rows = np.flatnonzero(inside)
            if rows.size == 0:
                break
            inside[rows] = test(X[rows])
        return inside

    interval = None
    if f.dim == 1:
        interval = support_formula_interval(f, q.point, q.f_bar, 0.0 if close else min(tol.eta_ladder), tol)
    dset = DualSet(f.dim, chunked_membership(membership), interval_1d=interval, label="df" if close else "df ladder")
    return dset.finalize(tol)


def _condition_sample_points(dim: int, tol: Tolerances) -> np.ndarray:
    half = tol.window_radius / 2.0
    if dim == 1:
        count = tol.support_dirs + (1 - tol.support_dirs % 2)
        return np.linspace(-half, half, count).reshape(-1, 1)
    return np.vstack([np.zeros((1, dim)), half * unit_directions(dim, tol.support_dirs)])


def sum_rule_eval(f1: ConvexFn, f2: ConvexFn, x_bar, eps: float, tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, object]:
    """Both sides of the eps-subdifferential sum rule at x_bar.

    The right-hand side is the union over sampled splits eps1 + eps2 = eps of
    the Minkowski sums of the pieces. At eps = 0 the comparison is reported
    but never certified.
    """
    lhs = eps_subdiff_set(EpsSubdiffQuery(Sum(f1, f2), x_bar, eps, tol))
    logging.info(f"Sum rule at eps={eps:g}: {len(tol.gamma_values(eps))} splits of eps")
    pieces = []
    for g1 in tol.gamma_values(eps):
        g2 = max(eps - g1, 0.0)
        s1 = eps_subdiff_set(EpsSubdiffQuery(f1, x_bar, float(g1), tol))
        s2 = eps_subdiff_set(EpsSubdiffQuery(f2, x_bar, float(g2), tol))
        logging.debug(f"Split ({g1:.4g}, {g2:.4g}) of eps")
        if f1.dim == 1 and (s1.interval_1d.is_empty or s2.interval_1d.is_empty):
            continue
        pieces.append(minkowski_sum(s1, s2, tol, label=f"split {g1:.3g}"))
    if f1.dim == 1:
        covered = [p.interval_1d for p in pieces if not p.interval_1d.is_empty]
        if covered:
            hull = XInterval(min(c.lo for c in covered), max(c.hi for c in covered))
            rhs = interval_set(hull, slack=tol.member_tol, label="sum of pieces")
        else:
            rhs = interval_set(EMPTY, label="sum of pieces")
    else:
        rhs = union(pieces, label="sum of pieces").finalize(tol)

    samples = _condition_sample_points(f1.dim, tol)
    checks = [check_condition_H(f1, f2, p, tol=tol) for p in samples]
    condition = all(c["condition"] for c in checks)
    equal = equal_on_window(lhs, rhs, tol)
    if eps == 0:
        logging.warning("Sum rule at eps = 0 is reported, not certified")
    return {
        "lhs": lhs,
        "rhs": rhs,
        "condition_H": bool(condition),
        "equal_on_window": bool(equal),
        "certified": bool(equal and eps > 0),
        "hausdorff_error": hausdorff_on_window(lhs, rhs, tol),
    }


def scale_rule_check(f: ConvexFn, x_bar, eps: float, lam: float, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """eps-subdifferential of lam f equals lam times the eps/lam-subdifferential of f."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    lhs = eps_subdiff_set(EpsSubdiffQuery(Scale(lam, f), x_bar, eps, tol))
    rhs = eps_subdiff_set(EpsSubdiffQuery(f, x_bar, eps / lam, tol)).scaled(lam)
    if lam != 1:
        rhs = rhs.finalize(tol)
    return equal_on_window(lhs, rhs, tol)


def separable_inclusions_check(phi1: ConvexFn, phi2: ConvexFn, x_bar, y_bar, eps: float, tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, object]:
    """Check d_eps phi(x, y) within the product of the pieces within d_2eps phi(x, y) on a dual grid."""
    phi = Separable(phi1, phi2)
    point = np.concatenate([np.ravel(x_bar), np.ravel(y_bar)]).astype(float)
    logging.info(f"Separable inclusions at {list(point)} for eps={eps:g}")
    joint = eps_subdiff_set(EpsSubdiffQuery(phi, point, eps, tol))
    product = eps_subdiff_set(EpsSubdiffQuery(phi1, x_bar, eps, tol)).product(
        eps_subdiff_set(EpsSubdiffQuery(phi2, y_bar, eps, tol))
    )
    # the doubled set adds two tested pieces, so it gets both slacks
    wide_tol = tol.replace(member_tol=2.0 * tol.member_tol)
    doubled = eps_subdiff_set(EpsSubdiffQuery(phi, point, 2.0 * eps, wide_tol))
    grid = tol.dual_grid(phi.dim)
    points = grid.points()
    counts = tuple(int(s.member(points).sum()) for s in (joint, product, doubled))
    return {
        "inner": subset_on_grid(joint, product, grid),
        "outer": subset_on_grid(product, doubled, grid),
        "counts": counts,
    }


def epigraph_link_check(f: ConvexFn, x_bar, eps: float, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """x* is in d_eps f(x_bar) iff (x*, -1) is an eps-normal to epi f at (x_bar, f(x_bar)).

    Dual grid points where the epigraph side rests on a clipped window are
    left out of the comparison.
    """
    q = EpsSubdiffQuery(f, x_bar, eps, tol)
    base = np.concatenate([q.point, [q.f_bar]])
    normals = eps_normal_set(Epigraph(f), base, eps, tol)
    X = tol.dual_grid(f.dim).points()
    lifted = np.hstack([X, -np.ones((X.shape[0], 1))])
    test, _ = _conjugate_test(q, eps)
    left = test(X)
    right = normals.member(lifted)
    decided = ~normals.unresolved(lifted)
    mismatches = int(np.sum((left != right) & decided))
    if mismatches:
        logging.warning(f"Epigraph link fails at {mismatches} dual grid points")
    return mismatches == 0


def eps_subdiff_abs_closed_form(x: float, eps: float) -> XInterval:
    """Closed form of the eps-subdifferential of |.| at x."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if x > eps / 2.0:
        return XInterval(1.0 - eps / x, 1.0)
    if x < -eps / 2.0:
        return XInterval(-1.0, -1.0 - eps / x)
    return XInterval(-1.0, 1.0)
