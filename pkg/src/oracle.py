"""Brute-force reference sets.

Every set here is decided by checking its defining inequality at each point
of a finite primal grid. Nothing is shared with the computed path except
function evaluation and set membership, so agreement between the two is
evidence rather than tautology.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from src.dual_sets import DualSet, chunked_membership
from src.errors import DimensionMismatch
from src.functions import ConvexFn
from src.numerics import DEFAULT_TOLERANCES, INF, Grid, Tolerances, as_points, iter_chunks
from src.sets import ConvexSetDesc

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

# dual points checked against the whole primal grid per block
DUAL_BLOCK = 64


@dataclass(frozen=True)
class OracleConfig:
    """Grids and quantifier slack of the brute-force checks.

    slack is the tolerance granted at the edge of the dual window; a dual
    point x* gets slack * |x*| / R, R being the dual grid radius.
    """
    primal_grid: Grid
    dual_grid: Grid
    slack: float

    def __post_init__(self):
        if self.slack < 0:
            raise ValueError("Oracle slack must be nonnegative")
        if self.primal_grid.dim != self.dual_grid.dim:
            raise DimensionMismatch(self.primal_grid.dim, self.dual_grid.dim, what="oracle dual grid")

    @property
    def dim(self) -> int:
        return self.primal_grid.dim

    def slack_at(self, X: np.ndarray) -> np.ndarray:
        return self.slack * np.linalg.norm(X, axis=1) / self.dual_grid.radius + 1e-12


def oracle_config(
    dim: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
    primal_grid: Optional[Grid] = None,
    dual_grid: Optional[Grid] = None,
    slack: Optional[float] = None,
) -> OracleConfig:
    """Config on the default window grids; slack defaults to 2 * primal step * R."""
    primal_grid = primal_grid or tol.primal_grid(dim)
    dual_grid = dual_grid or tol.dual_grid(dim)
    if slack is None:
        slack = 2.0 * primal_grid.max_step * dual_grid.radius
    return OracleConfig(primal_grid, dual_grid, float(slack))


def _for_all(P: np.ndarray, rhs: np.ndarray, cfg: OracleConfig):
    """Membership of x* iff <x*, p> <= rhs(p) + slack(x*) for every row p of P."""
    finite = np.isfinite(rhs)
    P, rhs = P[finite], rhs[finite]

    def test(X):
        if P.shape[0] == 0:
            return np.ones(X.shape[0], dtype=bool)
        out = np.empty(X.shape[0], dtype=bool)
        for start, stop in iter_chunks(X.shape[0], DUAL_BLOCK):
            block = X[start:stop]
            lhs = block @ P.T
            out[start:stop] = np.all(lhs <= rhs[None, :] + cfg.slack_at(block)[:, None], axis=1)
        return out

    return chunked_membership(test, chunk=DUAL_BLOCK * 16)


def oracle_eps_subdiff(f: ConvexFn, x_bar, eps: float, cfg: OracleConfig) -> DualSet:
    """{x* : <x*, x - x_bar> <= f(x) - f(x_bar) + eps at every primal grid point}."""
    if f.dim != cfg.dim:
        raise DimensionMismatch(cfg.dim, f.dim, what="oracle function")
    x_bar = as_points(x_bar, f.dim)[0]
    f_bar = float(f.evaluate(x_bar[None, :])[0])
    if not np.isfinite(f_bar):
        raise ValueError(f"f(x_bar) = {f_bar} is not finite")
    logging.info(f"Oracle eps-subdifferential at x_bar={list(x_bar)}, eps={eps:g} over {cfg.primal_grid.size} points")
    P = cfg.primal_grid.points()
    with np.errstate(over="ignore", invalid="ignore"):
        values = f.evaluate(P)
    # +inf values impose nothing
    rhs = np.where(np.isposinf(values), INF, values - f_bar + eps)
    return DualSet(f.dim, _for_all(P - x_bar, rhs, cfg), label="oracle eps-subdifferential")


def oracle_eps_normal(C: ConvexSetDesc, x_bar, eps: float, cfg: OracleConfig) -> DualSet:
    """{x* : <x*, x - x_bar> <= eps at every primal grid point of C}."""
    if C.dim != cfg.dim:
        raise DimensionMismatch(cfg.dim, C.dim, what="oracle set")
    x_bar = as_points(x_bar, C.dim)[0]
    P = cfg.primal_grid.points()
    P = np.vstack([P[C.member(P)], x_bar[None, :]])
    logging.info(f"Oracle eps-normal set at x_bar={list(x_bar)}, eps={eps:g} over {P.shape[0]} points of C")
    return DualSet(C.dim, _for_all(P - x_bar, np.full(P.shape[0], float(eps)), cfg), label="oracle eps-normal")


def oracle_polar(A: ConvexSetDesc, cfg: OracleConfig) -> DualSet:
    """{x* : <x*, x> <= 1 at every primal grid point of A}."""
    if A.dim != cfg.dim:
        raise DimensionMismatch(cfg.dim, A.dim, what="oracle set")
    P = cfg.primal_grid.points()
    P = P[A.member(P)]
    if P.shape[0] == 0:
        logging.warning("No primal grid point lies in the set; its oracle polar is the whole window")
    return DualSet(A.dim, _for_all(P, np.ones(P.shape[0]), cfg), label="oracle polar")


def oracle_value_fn(p, x_grid: Grid, y_grid: Grid) -> np.ndarray:
    """mu at every x_grid point as the exhaustive minimum over y_grid; +inf where infeasible."""
    X, Y = x_grid.points(), y_grid.points()
    mu = np.full(X.shape[0], INF)
    for i, x in enumerate(X):
        XY = np.hstack([np.tile(x, (Y.shape[0], 1)), Y])
        values = p.phi.evaluate(XY)
        if p.graph is not None:
            values = np.where(p.graph.member(XY), values, INF)
        mu[i] = values.min()
    return mu


def oracle_agreement(computed: DualSet, reference: DualSet, grid: Grid) -> Tuple[bool, int]:
    """Do two sets agree at every grid point up to a one-cell dilation?

    Returns the verdict and the number of grid points where one set has a
    member farther than one cell from the other.
    """
    if computed.dim != reference.dim or computed.dim != grid.dim:
        raise DimensionMismatch(grid.dim, computed.dim, what="compared set")
    shape = grid.counts
    a = computed.mask(grid).reshape(shape)
    b = reference.mask(grid).reshape(shape)
    structure = ndimage.generate_binary_structure(grid.dim, grid.dim)
    a_grown = ndimage.binary_dilation(a, structure=structure)
    b_grown = ndimage.binary_dilation(b, structure=structure)
    misses = int(np.count_nonzero(a & ~b_grown) + np.count_nonzero(b & ~a_grown))
    if misses:
        logging.warning(f"{computed.label or 'set'} and {reference.label or 'oracle'} disagree at {misses} grid points")
    return misses == 0, misses
