import numpy as np
import pandas as pd
import pytest

from src.errors import DimensionMismatch, NotASolution
from src.functions import AbsNorm, Affine, Exp1D, QuadDiag, Refined1D, Separable
from src.numerics import DEFAULT_TOLERANCES, INF, XInterval, interval_hausdorff_on_window
from src.parametric import (
    ParametricProblem,
    _pick,
    constrained_eps_subdiff,
    eps_subdiff_value_exact,
    eta_convergence_table,
    gamma_splits,
    optimal_value,
    reduction_identity_check,
    refined_value_function,
    regularity_report,
    single_solution_set,
    unconstrained_eps_subdiff,
    unconstrained_solution_case,
    value_function,
    y_grid,
)
from src.sets import Cone, GraphOfG, HalfspaceIntersection

# module level so the tabulated value functions are cached across tests
QUAD_ABS = ParametricProblem(Separable(QuadDiag((1.0,)), AbsNorm((1.0,))), 1, 1)
EXP_DECISION = ParametricProblem(Separable(QuadDiag((1.0,)), Exp1D()), 1, 1)
CONE_GRAPH = ParametricProblem(
    Separable(Affine((0.0,), 0.0), AbsNorm((1.0,))),
    1,
    1,
    GraphOfG(Cone.from_normals([[0.5, -1.0], [-0.5, -1.0]]), 1, 1),
)


def assert_interval(found: XInterval, expected: XInterval, tol=DEFAULT_TOLERANCES):
    assert interval_hausdorff_on_window(found, expected, tol), f"{found} != {expected}"


def test_problem_validation():
    with pytest.raises(DimensionMismatch):
        ParametricProblem(QuadDiag((1.0,)), 1, 1)
    with pytest.raises(DimensionMismatch):
        ParametricProblem(QuadDiag((1.0,) * 4), 1, 3)
    assert CONE_GRAPH.constrained and not QUAD_ABS.constrained


def test_gamma_splits():
    splits = gamma_splits(1.0)
    assert (splits[0].g1, splits[0].g2) == (0.0, 1.0)
    assert (splits[-1].g1, splits[-1].g2) == (1.0, 0.0)
    assert all(s.total == pytest.approx(1.0) for s in splits)


def test_decision_grid_is_twice_as_fine(tol):
    assert y_grid(QUAD_ABS, tol).max_step == pytest.approx(tol.primal_grid(1).max_step / 2.0)


def test_optimal_value_with_minimizer(tol):
    result = optimal_value(QUAD_ABS, [1.5], tol=tol)
    assert result.mu == pytest.approx(2.25)
    assert result.minimizer_found
    assert result.argmin == (0.0,)
    assert np.max(np.abs(result.M_eta_samples[1.0])) == pytest.approx(1.0)
    assert not result.window_flagged


def test_optimal_value_without_minimizer(tol):
    result = optimal_value(EXP_DECISION, [0.0], tol=tol)
    assert result.mu == pytest.approx(np.exp(-10.0))
    assert not result.minimizer_found
    assert result.window_flagged


def test_optimal_value_of_infeasible_parameter(tol):
    far = GraphOfG(HalfspaceIntersection(((1.0, -1.0),), (-100.0,)), 1, 1)
    p = ParametricProblem(Separable(Affine((0.0,), 0.0), AbsNorm((1.0,))), 1, 1, far)
    result = optimal_value(p, [0.0], tol=tol)
    assert result.mu == INF
    assert result.argmin is None


@pytest.mark.parametrize(
    "problem,points,expected",
    [
        (QUAD_ABS, [-2.0, 0.0, 1.5], [4.0, 0.0, 2.25]),
        (CONE_GRAPH, [-2.0, 0.0, 1.0], [1.0, 0.0, 0.5]),
    ],
)
def test_value_function(tol, problem, points, expected):
    mu = value_function(problem, tol)
    assert np.allclose(mu(points), expected, atol=tol.set_tol)
    assert value_function(problem, tol) is mu


def test_unconstrained_formulas_agree(tol):
    report = unconstrained_eps_subdiff(QUAD_ABS, [0.0], 0.25, tol)
    assert report["agree"]
    assert_interval(report["direct"].interval(tol), XInterval(-1.0, 1.0), tol)
    assert_interval(report["formula_meta"].interval(tol), XInterval(-1.0, 1.0), tol)
    assert report["hausdorff_error"] < tol.set_tol


def test_formulas_without_a_minimizing_decision(tol):
    report = unconstrained_eps_subdiff(EXP_DECISION, [0.0], 1.0, tol)
    assert report["agree"]
    assert_interval(report["formula_union"].interval(tol), XInterval(-2.0, 2.0), tol)


def test_wrong_formula_family_is_rejected(tol):
    with pytest.raises(ValueError):
        unconstrained_eps_subdiff(CONE_GRAPH, [0.0], 0.5, tol)
    with pytest.raises(ValueError):
        constrained_eps_subdiff(QUAD_ABS, [0.0], 0.5, tol)


def test_formulas_agree_at_a_smooth_minimum(tol):
    report = unconstrained_eps_subdiff(QUAD_ABS, [0.0], 0.0, tol)
    assert report["agree"]
    direct = report["direct"].interval(tol)
    assert max(abs(direct.lo), abs(direct.hi)) < 1e-3
    union = report["formula_union"].interval(tol)
    assert max(abs(union.lo), abs(union.hi)) < 1e-3
    assert report["hausdorff_error"] < tol.set_tol


def test_refined_value_function_near_the_base_point(tol):
    mu = refined_value_function(QUAD_ABS, [0.0], tol)
    assert isinstance(mu, Refined1D)
    assert refined_value_function(QUAD_ABS, [0.0], tol) is mu
    xs = np.array([-0.0073, -0.0001, 0.0, 0.0042, 3.0])
    assert np.allclose(mu(xs), xs ** 2, atol=1e-6)
    assert mu(0.0105) == pytest.approx(value_function(QUAD_ABS, tol)(0.0105))


def test_refined_value_function_keeps_the_table_in_the_plane():
    tol = DEFAULT_TOLERANCES.replace(window_radius=3.0)
    p = ParametricProblem(Separable(QuadDiag((1.0, 1.0)), AbsNorm((1.0,))), 2, 1)
    assert refined_value_function(p, [0.0, 0.0], tol) is value_function(p, tol)


@pytest.mark.parametrize("eps,half_width", [(0.0, 0.0), (0.25, 1.0)])
def test_exact_solution_form(tol, eps, half_width):
    report = eps_subdiff_value_exact(QUAD_ABS, [0.0], eps, tol=tol)
    assert report["y_sol"] == (0.0,)
    assert report["agree"]
    assert report["hausdorff_error"] < tol.set_tol
    assert_interval(report["single"].interval(tol), XInterval(-half_width, half_width), tol)


def test_exact_solution_form_needs_a_minimizer(tol):
    with pytest.raises(NotASolution):
        eps_subdiff_value_exact(EXP_DECISION, [0.0], 0.0, tol=tol)
    report = eps_subdiff_value_exact(CONE_GRAPH, [0.0], 0.5, tol=tol)
    assert report["y_sol"] == (0.0,)
    assert report["agree"]


def test_single_solution_case(tol):
    single = single_solution_set(QUAD_ABS, [0.0], 0.25, [0.0], tol)
    assert_interval(single.interval(tol), XInterval(-1.0, 1.0), tol)
    assert unconstrained_solution_case(QUAD_ABS, [0.0], 0.25, [0.0], tol)
    with pytest.raises(NotASolution):
        single_solution_set(QUAD_ABS, [0.0], 0.25, [1.0], tol)


def test_regularity_report(tol):
    report = regularity_report(CONE_GRAPH, tol)
    assert report["b"] is True
    assert report["state"] == "CERTIFIED"


def test_constrained_formulas(tol):
    report = constrained_eps_subdiff(CONE_GRAPH, [0.0], 0.5, tol)
    assert report["agree"]
    assert_interval(report["direct"].interval(tol), XInterval(-0.5, 0.5), tol)
    assert report["regularity"]["state"] == "CERTIFIED"


def test_eta_convergence_table(tol):
    table = eta_convergence_table(QUAD_ABS, [0.0], 0.25, tol=tol)
    assert isinstance(table, pd.DataFrame)
    assert list(table.columns) == ["eta", "stage", "members", "lo", "hi", "hausdorff_change"]
    assert len(table) == len(tol.eta_ladder) + 1
    assert table["eta"].iloc[-1] == 0.0
    assert list(table["stage"]) == ["ladder"] * len(tol.eta_ladder) + ["closed"]
    assert np.isnan(table["hausdorff_change"].iloc[0])
    assert table["members"].is_monotonic_decreasing
    assert table["hi"].iloc[-1] == pytest.approx(1.0, abs=tol.set_tol)


def test_ladder_alone_stops_short_of_the_closed_set(tol):
    table = eta_convergence_table(QUAD_ABS, [0.0], 0.0, which="union", tol=tol)
    ladder, closed = table.iloc[-2], table.iloc[-1]
    assert ladder["stage"] == "ladder"
    # the smallest ladder step leaves [-2 sqrt(eta), 2 sqrt(eta)]
    assert ladder["hi"] == pytest.approx(2.0 * np.sqrt(min(tol.eta_ladder)), abs=tol.set_tol)
    assert ladder["lo"] == pytest.approx(-ladder["hi"], abs=tol.set_tol)
    assert closed["stage"] == "closed"
    assert abs(closed["hi"]) < 1e-3
    assert abs(closed["lo"]) < 1e-3


def test_convergence_table_in_the_plane():
    tol = DEFAULT_TOLERANCES.replace(window_radius=3.0, eta_ladder=(1.0, 0.1))
    p = ParametricProblem(Separable(QuadDiag((1.0, 1.0)), AbsNorm((1.0,))), 2, 1)
    table = eta_convergence_table(p, [0.0, 0.0], 0.25, tol=tol)
    assert table["lo"].isna().all() and table["hi"].isna().all()
    assert table["members"].iloc[-1] > 0


def test_pick_keeps_minimizer_and_ends():
    Y = np.linspace(-1.0, 1.0, 201).reshape(-1, 1)
    picked = _pick(Y, anchor=(0.33,))
    assert [0.33] in picked.tolist()
    assert picked.min() == -1.0 and picked.max() == 1.0
    small = Y[:3]
    assert _pick(small).shape[0] == 3
    assert _pick(np.empty((0, 1)), anchor=(0.0,)).shape == (0, 1)


def test_pick_in_the_plane_keeps_hull_extremes():
    g = np.linspace(-1.0, 1.0, 41)
    Y = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    Y = Y[np.linalg.norm(Y, axis=1) <= 1.0]
    anchor = (0.1, 0.2)
    picked = _pick(Y, anchor=anchor)
    rows = [tuple(np.round(r, 9)) for r in picked]
    assert anchor in rows
    for extreme in [(-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0)]:
        assert extreme in rows
    others = np.array([r for r in rows if r != anchor])
    assert np.all(np.linalg.norm(others, axis=1) >= 0.9)


def test_pick_on_a_flat_solution_set():
    t = np.linspace(0.0, 1.0, 30)
    Y = np.column_stack([t, t])
    picked = _pick(Y, anchor=(0.5, 0.5))
    rows = picked.tolist()
    assert [0.0, 0.0] in rows and [1.0, 1.0] in rows
    assert [0.5, 0.5] in rows


@pytest.mark.parametrize("problem", [QUAD_ABS, EXP_DECISION, CONE_GRAPH])
def test_reduction_identity(tol, problem):
    report = reduction_identity_check(problem, tol=tol)
    assert report["holds"]
    assert report["compared"] > 0
    assert report["max_gap"] <= report["conj_tol"]
