import numpy as np
import pytest

from src.dual_sets import (
    DualSet,
    cloud_hausdorff,
    empty_set,
    equal_on_window,
    extract_interval,
    grid_support,
    hausdorff_on_window,
    interval_set,
    intersect,
    minkowski_sum,
    point_set,
    subset_on_grid,
    union,
)
from src.numerics import EMPTY, INF, Grid, XInterval


def disc(radius, center=(0.0, 0.0)):
    c = np.asarray(center)
    return DualSet(dim=2, membership=lambda X: np.linalg.norm(X - c, axis=1) <= radius + 1e-9, label="disc")


def test_extract_interval_finds_both_edges():
    found = extract_interval(lambda X: (X[:, 0] >= -1.0) & (X[:, 0] <= 2.0), 10.0)
    assert found.lo == pytest.approx(-1.0, abs=1e-6)
    assert found.hi == pytest.approx(2.0, abs=1e-6)


def test_extract_interval_edge_member_is_unbounded():
    found = extract_interval(lambda X: X[:, 0] <= 0.5, 10.0)
    assert found.lo == -INF
    assert found.hi == pytest.approx(0.5, abs=1e-6)


def test_extract_interval_sees_thin_sets_on_the_fine_pass():
    # a set thinner than the coarse step
    found = extract_interval(lambda X: np.abs(X[:, 0] - 0.012) <= 0.004, 10.0)
    assert not found.is_empty
    assert found.lo == pytest.approx(0.008, abs=1e-5)


def test_extract_interval_empty():
    assert extract_interval(lambda X: np.zeros(X.shape[0], dtype=bool), 10.0).is_empty


def test_intersect_and_union_of_intervals():
    a = interval_set(XInterval(-INF, 1.0))
    b = interval_set(XInterval(0.0, 3.0))
    both = intersect([a, b])
    assert both.interval() == XInterval(0.0, 1.0)
    assert both.contains(0.5) and not both.contains(2.0)
    either = union([interval_set(XInterval(0.0, 1.0)), interval_set(XInterval(2.0, 3.0))])
    assert either.contains(2.5) and not either.contains(1.5)
    assert intersect([interval_set(XInterval(0.0, 1.0)), interval_set(XInterval(2.0, 3.0))]).interval().is_empty


def test_intersect_needs_a_set():
    with pytest.raises(ValueError):
        intersect([])


def test_scaling():
    a = interval_set(XInterval(-1.0, 2.0), label="a")
    assert a.scaled(2.0).interval() == XInterval(-2.0, 4.0)
    assert a.scaled(2.0).contains(3.5)
    assert a.scaled(0.0).interval() == XInterval(0.0, 0.0)
    with pytest.raises(ValueError):
        a.scaled(-1.0)


def test_product_membership():
    prod = interval_set(XInterval(0.0, 1.0)).product(interval_set(XInterval(-INF, 0.0)))
    assert prod.dim == 2
    assert prod.contains([0.5, -7.0])
    assert not prod.contains([0.5, 1.0])


def test_minkowski_sum_of_intervals_is_exact():
    total = minkowski_sum(interval_set(XInterval(0.0, 1.0)), interval_set(XInterval(-INF, 2.0)))
    assert total.interval() == XInterval(-INF, 3.0)


def test_minkowski_sum_in_the_plane(small_window):
    total = minkowski_sum(point_set([1.0, 0.0]), point_set([0.0, 1.0]), small_window)
    assert total.contains([1.0, 1.0])
    assert not total.contains([1.0, 0.5])


def test_empty_and_point_sets():
    assert empty_set(1).interval() is EMPTY
    assert empty_set(2).is_empty_on_window()
    assert point_set([0.5]).interval() == XInterval(0.5, 0.5)


def test_cloud_hausdorff():
    P = np.array([[0.0, 0.0], [1.0, 0.0]])
    Q = np.array([[0.0, 0.0]])
    assert cloud_hausdorff(P, Q) == pytest.approx(1.0)
    assert cloud_hausdorff(P[:0], Q[:0]) == 0.0
    assert cloud_hausdorff(P, Q[:0]) == INF


def test_grid_support_of_a_disc():
    grid = Grid.window(2, 2.0, 41)
    directions, values = grid_support(disc(1.0), np.array([[1.0, 0.0], [0.0, -1.0]]), grid)
    assert directions.shape == (2, 2)
    assert np.allclose(values, 1.0)
    _, unbounded = grid_support(disc(10.0), np.array([[1.0, 0.0]]), grid)
    assert unbounded[0] == INF


def test_window_comparisons(small_window):
    grid = small_window.dual_grid(2)
    assert subset_on_grid(disc(1.0), disc(2.0), grid)
    assert not subset_on_grid(disc(2.0), disc(1.0), grid)
    assert equal_on_window(disc(1.0), disc(1.0), small_window)
    assert hausdorff_on_window(disc(1.0), disc(2.0), small_window) == pytest.approx(1.0, abs=0.1)
    assert not equal_on_window(disc(1.0), disc(1.5), small_window)


def test_finalize_fills_views(tol):
    final = interval_set(XInterval(0.0, 1.0)).finalize(tol)
    assert final.interval_1d == XInterval(0.0, 1.0)
    assert not final.window_flagged
    flagged = DualSet(
        dim=1,
        membership=lambda X: X[:, 0] >= 0.0,
        unresolved=lambda X: X[:, 0] >= 0.0,
    ).finalize(tol)
    assert flagged.window_flagged
    assert flagged.interval_1d.hi == INF
