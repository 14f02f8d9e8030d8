import numpy as np
import pytest

from src.data_loader import ScenarioLoader, load_scenario
from src.errors import DimensionMismatch, UnsupportedDomainShape, WindowTooSmall
from src.functions import (
    AbsNorm,
    Affine,
    ConjugateOf,
    Exp1D,
    Indicator,
    NegSqrt1D,
    QuadDiag,
    Sampled,
)
from src.numerics import INF, Grid
from src.sets import Ball, Singleton
from src.transforms import (
    check_condition_H,
    check_regularity,
    conjugate,
    conjugate_at,
    conjugate_function,
    biconjugate,
    inf_convolution,
    regularity_implication_graph,
    sweep_conjugate,
    verdicts_consistent,
)


def test_sweep_matches_closed_form_for_square(tol):
    result = conjugate(QuadDiag((1.0,)), tol=tol)
    assert not result.window_flagged
    assert isinstance(result.closed_form, ConjugateOf)
    s = tol.dual_grid(1).axis_points(0)
    bound = tol.conj_tol(tol.primal_grid(1), tol.window_radius)
    assert np.max(np.abs(np.ravel(result.sampled.values) - s ** 2 / 4.0)) <= bound
    assert np.allclose(result.attainment_map[:, 0], s / 2.0, atol=tol.primal_grid(1).max_step)


def test_affine_conjugate_runs_into_the_window(tol):
    result = conjugate(Affine((1.0,), 0.0), tol=tol)
    assert result.window_flagged
    assert result.flagged_points.shape[0] > 0
    assert np.isnan(result.attainment_map).any()
    with pytest.raises(WindowTooSmall):
        conjugate(Affine((1.0,), 0.0), tol=tol, strict=True)


def test_conjugate_rejects_wrong_grid(tol):
    with pytest.raises(DimensionMismatch):
        conjugate(QuadDiag((1.0,)), dual_grid=Grid.window(2, 1.0, 3), tol=tol)


def test_conjugate_at_prefers_closed_form(tol):
    values, flags = conjugate_at(NegSqrt1D(), [[-0.5], [0.5]], tol)
    assert values[0] == pytest.approx(0.5)
    assert values[1] == INF
    assert not flags.any()


def test_sweep_in_the_plane():
    values, argmax, flags = sweep_conjugate(AbsNorm((1.0, 1.0)), np.array([[0.5, -0.5]]), Grid.window(2, 2.0, 41))
    assert values[0] == pytest.approx(0.0)
    assert np.allclose(argmax[0], 0.0)
    assert not flags[0]


def test_conjugate_function_falls_back_to_samples(small_window):
    grid = Grid.window(2, 1.0, 3)
    values = (grid.points() ** 2).sum(axis=1)
    f = Sampled(grid, values)
    assert not f.has_closed_conjugate
    conj = conjugate_function(f, small_window)
    assert isinstance(conj, Sampled)
    assert conj([0.0, 0.0]) == pytest.approx(0.0)
    assert isinstance(conjugate_function(QuadDiag((1.0,)), small_window), ConjugateOf)


def test_biconjugate_of_square(tol):
    bic = biconjugate(QuadDiag((1.0,)), tol=tol)
    x = tol.primal_grid(1).axis_points(0)
    inner = np.abs(x) <= 9.0
    assert np.allclose(bic.values[inner], x[inner] ** 2, atol=1e-3)


def test_biconjugate_closes_an_open_edge(tol):
    grid = Grid(((0.0, 1.0, 0.5),))
    f = Sampled(grid, np.zeros(3), edge_values=(1.0, None))
    bic = biconjugate(f, tol=tol)
    assert f(0.0) == 1.0
    assert bic(0.0) < 0.1
    assert bic(0.5) == pytest.approx(0.0, abs=1e-6)
    assert bic(-0.5) == INF


def test_inf_convolution_of_squares(tol):
    cert = inf_convolution(QuadDiag((1.0,)), QuadDiag((1.0,)), [2.0], tol=tol)
    assert cert.value == pytest.approx(2.0)
    assert cert.attained
    assert cert.split == ((1.0,), (1.0,))
    assert cert.to_json()["split"] == [[1.0], [1.0]]


def test_inf_convolution_diverges(tol):
    cert = inf_convolution(Affine((1.0,), 0.0), Affine((2.0,), 0.0), [0.0], tol=tol)
    assert cert.value == -INF
    assert cert.split is None
    assert cert.to_json()["value_sign"] == -1


def test_inf_convolution_infimum_at_infinity(tol):
    cert = inf_convolution(Exp1D(), Affine((0.0,), 0.0), [0.0], tol=tol)
    assert cert.value == pytest.approx(0.0, abs=1e-4)
    assert not cert.attained


def test_conjugate_sum_condition_for_point_and_sqrt(tol):
    report = check_condition_H(Indicator(Singleton((0.0,))), NegSqrt1D(), [0.0], tol=tol)
    assert report["holds_as_inf"]
    assert not report["attained"]
    assert not report["condition"]
    assert report["lhs"] == pytest.approx(0.0)


def test_conjugate_sum_condition_for_smooth_pair(tol):
    report = check_condition_H(QuadDiag((1.0,)), QuadDiag((1.0,)), [2.0], tol=tol)
    assert report["condition"]
    assert report["lhs"] == pytest.approx(0.5, abs=tol.set_tol)


@pytest.mark.parametrize(
    "name",
    ["regularity_line_pair.json", "regularity_crossing_lines.json"],
)
def test_regularity_fixtures(fixtures_dir, tol, name):
    scenario = load_scenario(fixtures_dir / name)
    f1 = ScenarioLoader.function(scenario.inputs["f1"])
    f2 = ScenarioLoader.function(scenario.inputs["f2"])
    verdicts = check_regularity(f1, f2, tol)
    for key, value in scenario.expected.items():
        assert verdicts[key] is value
    assert verdicts_consistent(verdicts)


def test_regularity_of_full_and_half_line(tol):
    assert check_regularity(AbsNorm((1.0,)), NegSqrt1D(), tol) == {"mr": True, "ab": True, "bs": True}


def test_regularity_needs_polyhedral_domains(tol):
    with pytest.raises(UnsupportedDomainShape):
        check_regularity(Indicator(Ball((0.0, 0.0), 1.0)), AbsNorm((1.0, 1.0)), tol)


def test_implication_graph():
    graph = regularity_implication_graph()
    assert set(graph.edges()) == {("mr", "bs"), ("bs", "ab"), ("mr", "ab")}
    assert verdicts_consistent({"mr": False, "ab": True, "bs": False})
    assert not verdicts_consistent({"mr": True, "ab": True, "bs": False})
    assert not verdicts_consistent({"mr": False, "ab": False, "bs": True})


def _fixture_inputs(*keys):
    """(scenario name, input nodes) for every bundled scenario that has all the keys."""
    found = []
    for path in ScenarioLoader.fixture_paths():
        scenario = load_scenario(path)
        if all(key in scenario.inputs for key in keys):
            found.append((scenario.name, [scenario.inputs[key] for key in keys]))
    return found


def _is_closed(node) -> bool:
    return not any(v is not None for v in node.get("edge_values") or [])


FIXTURE_FUNCTIONS = [
    (name, nodes[0]) for name, nodes in _fixture_inputs("f")
    if _is_closed(nodes[0]) and ScenarioLoader.function(nodes[0]).dim == 1
]


@pytest.mark.parametrize("node", [n for _, n in FIXTURE_FUNCTIONS], ids=[name for name, _ in FIXTURE_FUNCTIONS])
def test_biconjugate_is_idempotent_on_closed_fixtures(tol, node):
    f = ScenarioLoader.function(node)
    grid = tol.primal_grid(1)
    limit = tol.conj_tol(grid, tol.window_radius)
    once = biconjugate(f, grid, tol)
    twice = biconjugate(once, grid, tol)
    fx, bx, bbx = f.evaluate(grid.points()), np.ravel(once.values), np.ravel(twice.values)
    finite = np.isfinite(fx)
    assert np.array_equal(finite, np.isfinite(bx))
    assert np.max(np.abs(fx[finite] - bx[finite])) <= limit
    assert np.max(np.abs(bx[finite] - bbx[finite])) <= limit


def test_fixture_function_sweep_is_not_empty():
    assert len(FIXTURE_FUNCTIONS) >= 5


REGULARITY_PAIRS = [(name, nodes) for name, nodes in _fixture_inputs("f1", "f2")]


@pytest.mark.parametrize("nodes", [n for _, n in REGULARITY_PAIRS], ids=[name for name, _ in REGULARITY_PAIRS])
def test_fixture_pairs_respect_the_implications(tol, nodes):
    f1, f2 = (ScenarioLoader.function(n) for n in nodes)
    assert verdicts_consistent(check_regularity(f1, f2, tol))
    assert verdicts_consistent(check_regularity(f2, f1, tol))


@pytest.mark.parametrize(
    "f1,f2",
    [
        (AbsNorm((1.0,)), QuadDiag((1.0,))),
        (NegSqrt1D(), Indicator(Singleton((0.0,)))),
        (NegSqrt1D(), Indicator(Singleton((-1.0,)))),
        (Indicator(Singleton((0.0, 0.0))), AbsNorm((1.0, 1.0))),
        (Affine((1.0, 0.0), 0.0), Indicator(Singleton((1.0, 2.0)))),
    ],
)
def test_inline_pairs_respect_the_implications(tol, f1, f2):
    assert verdicts_consistent(check_regularity(f1, f2, tol))
