import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from src.data_loader import ScenarioLoader
from src.dual_sets import DualSet, equal_on_window, subset_on_grid
from src.errors import SchemaError, UnsupportedDomainShape
from src.functions import AbsNorm, epigraph
from src.numerics import DEFAULT_TOLERANCES, INF, Grid, XInterval, unit_directions
from src.sets import (
    Ball,
    Box,
    Cone,
    HalfspaceIntersection,
    Interval,
    Product,
    Singleton,
    Translate,
    chebyshev_radius,
    cone_eps_normals,
    eps_normal_set,
    eps_normal_via_polar,
    has_exact_support,
    intersect_sets,
    normal_cone_limit,
    polar,
    set_from_json,
    set_sample_points,
)

ORTHANT = Cone.from_normals([[-1.0, 0.0], [0.0, -1.0]])


def test_support_of_primitives():
    assert Interval(XInterval(-2.0, 1.0)).support_at(3.0) == 3.0
    assert Interval(XInterval(-2.0, 1.0)).support_at(-1.0) == 2.0
    assert Interval(XInterval(0.0, INF)).support_at(1.0) == INF
    assert Box((0.0, -1.0), (1.0, 1.0)).support_at([1.0, -1.0]) == 2.0
    assert Ball((1.0, 0.0), 2.0).support_at([0.0, 1.0]) == pytest.approx(2.0)
    assert Singleton((1.0, 2.0)).support_at([1.0, 1.0]) == 3.0
    assert Translate(Ball((0.0, 0.0), 1.0), (1.0, 0.0)).support_at([1.0, 0.0]) == pytest.approx(2.0)


def test_halfspace_support_detects_unbounded_directions():
    half_plane = HalfspaceIntersection(((1.0, 0.0),), (1.0,))
    assert half_plane.support_at([1.0, 0.0]) == pytest.approx(1.0)
    assert half_plane.support_at([0.0, 1.0]) == INF


def test_epigraph_support_flags_window_maximizers(tol):
    epi = epigraph(AbsNorm((1.0,)))
    values, flagged = epi.support(np.array([[0.5, -1.0], [2.0, -1.0], [0.0, 1.0]]), tol)
    assert values[0] == pytest.approx(0.0)
    assert not flagged[0]
    assert flagged[1]
    assert values[2] == INF


def test_product_and_exact_support():
    prod = Product(Interval(XInterval(0.0, 1.0)), Ball((0.0,), 1.0))
    assert prod.contains([0.5, -1.0])
    assert has_exact_support(prod)
    assert not has_exact_support(epigraph(AbsNorm((1.0,))))


def test_intersect_sets_simplifies():
    meet = intersect_sets(Interval(XInterval(-INF, 2.0)), Interval(XInterval(0.0, INF)))
    assert meet.bounds == XInterval(0.0, 2.0)
    with pytest.raises(ValueError):
        intersect_sets(Interval(XInterval(0.0, 1.0)), Interval(XInterval(2.0, 3.0)))
    box_meet = intersect_sets(Box((0.0, 0.0), (2.0, 2.0)), Ball((0.0, 0.0), 1.0))
    assert box_meet.contains([0.5, 0.5])


def test_chebyshev_radius():
    A, b = Box((-1.0, -1.0), (1.0, 1.0)).halfspaces()
    assert chebyshev_radius(A, b) == pytest.approx(1.0)
    assert chebyshev_radius(np.array([[1.0], [-1.0]]), np.array([0.0, -1.0])) is None


def test_set_json():
    box = set_from_json({"type": "box", "lo": [None, 0.0], "hi": [1.0, None]})
    assert box.lo == (-INF, 0.0) and box.hi == (1.0, INF)
    cone = set_from_json({"type": "cone", "A": [[1.0, -1.0]]})
    assert isinstance(cone, Cone)
    with pytest.raises(SchemaError):
        set_from_json({"type": "simplex"})
    with pytest.raises(SchemaError):
        set_from_json({"type": "ball", "radius": 1.0})


def test_cone_needs_zero_offsets():
    with pytest.raises(ValueError):
        Cone(((1.0, 0.0),), (1.0,))


def test_polar_of_interval(tol):
    found = polar(Interval(XInterval(-2.0, 1.0)), tol).interval()
    assert found.lo == pytest.approx(-0.5, abs=1e-6)
    assert found.hi == pytest.approx(1.0, abs=1e-6)
    half_line = polar(Interval(XInterval(0.0, INF)), tol).interval()
    assert half_line.lo == -INF
    assert half_line.hi == pytest.approx(0.0, abs=1e-6)


def test_polar_of_ball_is_ball(small_window):
    found = polar(Ball((0.0, 0.0), 1.0), small_window)
    assert found.contains([0.5, 0.5])
    assert not found.contains([1.0, 1.0])
    unit = DualSet(dim=2, membership=lambda X: np.linalg.norm(X, axis=1) <= 1.0 + 1e-9)
    assert equal_on_window(found, unit, small_window)


def test_polar_of_cone_is_polar_cone(small_window):
    found = polar(ORTHANT, small_window)
    assert found.contains([-3.0, -0.5])
    assert not found.contains([0.1, -1.0])


def test_eps_normals_of_interval(tol):
    found = eps_normal_set(Interval(XInterval(0.0, 1.0)), [0.0], 0.5, tol).interval()
    assert found.lo == -INF
    assert found.hi == pytest.approx(0.5, abs=1e-6)
    with pytest.raises(ValueError):
        eps_normal_set(Interval(XInterval(0.0, 1.0)), [2.0], 0.5, tol)
    with pytest.raises(ValueError):
        eps_normal_set(Interval(XInterval(0.0, 1.0)), [0.0], -1.0, tol)


def test_eps_normals_match_scaled_polar(small_window):
    ball = Ball((0.0, 0.0), 1.0)
    direct = eps_normal_set(ball, [1.0, 0.0], 0.5, small_window)
    via_polar = eps_normal_via_polar(ball, [1.0, 0.0], 0.5, small_window)
    assert equal_on_window(direct, via_polar, small_window)
    with pytest.raises(ValueError):
        eps_normal_via_polar(ball, [1.0, 0.0], 0.0, small_window)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_eps_normals_grow_with_eps(e1, e2):
    tol = DEFAULT_TOLERANCES
    lo, hi = sorted((e1, e2))
    C = Interval(XInterval(-1.0, 2.0))
    grid = Grid.window(1, 10.0, 401)
    assert subset_on_grid(eps_normal_set(C, [0.5], lo, tol), eps_normal_set(C, [0.5], hi, tol), grid)


def test_normal_cone_limit_of_interval(tol):
    found = normal_cone_limit(Interval(XInterval(0.0, 1.0)), [0.0], 1.0, tol).interval()
    assert found.lo == -INF
    assert abs(found.hi) < tol.set_tol


def test_cone_eps_normals(small_window):
    found = cone_eps_normals(ORTHANT, [1.0, 0.0], 0.5, small_window)
    assert found.contains([-0.25, -3.0])
    assert not found.contains([-1.0, 0.0])
    assert not found.contains([0.1, 0.0])
    direct = eps_normal_set(ORTHANT, [1.0, 0.0], 0.5, small_window)
    assert equal_on_window(found, direct, small_window)
    with pytest.raises(UnsupportedDomainShape):
        cone_eps_normals(Ball((0.0, 0.0), 1.0), [0.0, 0.0], 0.5, small_window)
def _fixture_sets():
    """Every set node in the inputs of the bundled scenarios, deduplicated."""
    found = {}

    def walk(node):
        if isinstance(node, dict):
            for key, value in node.items():
                if key in ("set", "graph") and isinstance(value, dict):
                    found.setdefault(json.dumps(value, sort_keys=True), value)
                walk(value)
        elif isinstance(node, list):
            for value in node:
                walk(value)

    for path in ScenarioLoader.fixture_paths():
        walk(ScenarioLoader.load_scenario(path).inputs)
    return [found[key] for key in sorted(found)]


FIXTURE_SETS = _fixture_sets()


def _base_point(C, tol):
    points = set_sample_points(C, tol)
    return points[np.argmin(np.linalg.norm(points, axis=1))]


@pytest.mark.parametrize("eps", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("node", FIXTURE_SETS, ids=[n["type"] for n in FIXTURE_SETS])
def test_eps_normals_are_the_scaled_polar_for_fixture_sets(small_window, node, eps):
    C = set_from_json(node)
    x_bar = _base_point(C, small_window)
    direct = eps_normal_set(C, x_bar, eps, small_window)
    via_polar = eps_normal_via_polar(C, x_bar, eps, small_window)
    assert equal_on_window(direct, via_polar, small_window)


def test_fixture_sets_cover_the_shapes():
    assert {"box", "ball", "cone", "graph", "halfspaces"} <= {n["type"] for n in FIXTURE_SETS}


@pytest.mark.parametrize(
    "region",
    [
        HalfspaceIntersection(((1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)), (1.0, 1.0, 1.0, 1.0)),
        HalfspaceIntersection(((-1.0, 0.0), (0.0, -1.0), (1.0, 2.0)), (0.0, 0.0, 2.0)),
        HalfspaceIntersection(((1.0, 0.0, 0.0), (-1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, -1.0, 0.0),
                               (0.0, 0.0, 1.0), (-1.0, -1.0, -1.0)), (1.0, 1.0, 1.0, 1.0, 2.0, 1.0)),
    ],
)
def test_polytope_support_matches_linear_programming(tol, region):
    A, b = region.halfspaces()
    D = unit_directions(region.dim, 12)
    values, _ = region.support(D, tol)
    for d, value in zip(D, values):
        result = linprog(-d, A_ub=A, b_ub=b, bounds=[(None, None)] * region.dim, method="highs")
        assert result.status == 0
        assert value == pytest.approx(-result.fun, abs=1e-7)
