"""Scenario runner and report writer.

A scenario names one operation, its inputs as JSON ASTs, and optionally the
expected outcome. Running it computes the sets, compares them with the
expectation on the window, and yields one report row; 2D sets can be
rendered to SVG next to the CSV report.
"""
import logging
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from app_config import OutputSettings, load_tolerances
from src.data_loader import Scenario, ScenarioLoader, ext_real
from src.dual_sets import DualSet, equal_on_window, hausdorff_on_window, interval_set
from src.errors import EpsKitError, WindowTooSmall
from src.functions import check_lsc_on_grid, function_from_json
from src.numerics import INF, Tolerances, interval_from_json
from src.oracle import oracle_agreement
from src.parametric import (
    constrained_eps_subdiff,
    eta_convergence_table,
    reduction_identity_check,
    unconstrained_eps_subdiff,
    unconstrained_solution_case,
    value_function,
)
from src.sets import Cone, cone_eps_normals, eps_normal_set, polar, set_from_json
from src.subdiff import (
    EpsSubdiffQuery,
    epigraph_link_check,
    eps_subdiff_set,
    scale_rule_check,
    separable_inclusions_check,
    subdiff_via_eps_intersection,
    sum_rule_eval,
)
from src.transforms import biconjugate, check_condition_H, check_regularity, conjugate_at, verdicts_consistent
from src.visualization import SetVisualizer

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

REPORT_COLUMNS = ["scenario", "operation", "pass", "hausdorff_error", "flags", "millis"]
WINDOW_FLAG = "WindowTooSmall"


@dataclass
class Outcome:
    passed: bool = True
    hausdorff_error: float = 0.0
    flags: List[str] = field(default_factory=list)
    computed: Dict[str, Any] = field(default_factory=dict)
    figures: List[Tuple[str, Any, Any]] = field(default_factory=list)
    convergence: Optional[pd.DataFrame] = None

    def check(self, ok: bool, flag: str) -> None:
        if not ok:
            self.passed = False
            self.flags.append(flag)

    def merge(self, other: "Outcome", prefix: str) -> None:
        self.passed = self.passed and other.passed
        self.hausdorff_error = max(self.hausdorff_error, other.hausdorff_error)
        self.flags.extend(f for f in other.flags if f not in self.flags)
        self.computed[prefix] = other.computed
        self.figures.extend((f"{prefix}_{name}", a, b) for name, a, b in other.figures)
        if other.convergence is not None:
            self.convergence = other.convergence


@dataclass
class RunReport:
    scenario: str
    operation: str
    passed: bool
    hausdorff_error: float
    flags: List[str]
    millis: Optional[float]
    computed: Dict[str, Any] = field(default_factory=dict)
    convergence: Optional[pd.DataFrame] = None
    description: str = ""
    ref: str = ""
    figures: List[Path] = field(default_factory=list)

    def to_row(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "operation": self.operation,
            "pass": self.passed,
            "hausdorff_error": self.hausdorff_error,
            "flags": ";".join(sorted(set(self.flags))),
            "millis": self.millis,
        }


# expectations

def _describe(dset: DualSet, tol: Tolerances) -> Dict[str, Any]:
    if dset.dim == 1:
        return dset.interval(tol).to_json()
    return {"members": int(dset.mask(tol.dual_grid(dset.dim)).sum()), "window_flagged": dset.window_flagged}


def _window_flags(dset: DualSet, tol: Tolerances) -> List[str]:
    """Flag sets decided on a clipped window or with a finite endpoint past it."""
    if dset.window_flagged:
        return [WINDOW_FLAG]
    if dset.dim == 1:
        iv = dset.interval(tol)
        ends = [e for e in (iv.lo, iv.hi) if np.isfinite(e)]
        if not iv.is_empty and any(abs(e) > tol.window_radius + 1e-12 for e in ends):
            return [WINDOW_FLAG]
    return []


def expected_dual_set(expected: Mapping[str, Any], dim: int) -> Optional[DualSet]:
    """The reference set an expectation describes, when it describes one."""
    if "interval" in expected:
        return interval_set(interval_from_json(expected), label="expected")
    if "empty" in expected and expected["empty"]:
        return DualSet(dim, lambda X: np.zeros(X.shape[0], dtype=bool), label="expected")
    if "set" in expected:
        desc = set_from_json(expected["set"])
        return DualSet(desc.dim, desc.member, label="expected")
    if "sublevel" in expected:
        sublevel = expected["sublevel"]
        f, level = function_from_json(sublevel["function"]), float(sublevel["level"])
        return DualSet(f.dim, lambda X: f.evaluate(X) <= level + 1e-9, label="expected")
    return None


def compare_set(dset: DualSet, expected: Optional[Mapping[str, Any]], tol: Tolerances, what: str = "set") -> Outcome:
    out = Outcome(computed={what: _describe(dset, tol)})
    out.flags.extend(_window_flags(dset, tol))
    if dset.dim == 2:
        ref = expected_dual_set(expected, 2) if expected else None
        out.figures.append((what, dset, ref))
    if not expected:
        return out
    if "empty" in expected:
        empty = dset.is_empty_on_window(tol)
        out.hausdorff_error = 0.0 if empty == bool(expected["empty"]) else INF
        out.check(empty == bool(expected["empty"]), f"{what}:empty" if empty else f"{what}:nonempty")
        return out
    ref = expected_dual_set(expected, dset.dim)
    if ref is None:
        return out
    if dset.dim == 1:
        ref = ref.finalize(tol) if ref.interval_1d is None else ref
        out.hausdorff_error = hausdorff_on_window(dset, ref, tol)
        out.check(equal_on_window(dset, ref, tol), f"{what}:mismatch")
    else:
        ok, misses = oracle_agreement(dset, ref, tol.dual_grid(dset.dim))
        out.hausdorff_error = hausdorff_on_window(dset, ref, tol)
        out.computed[f"{what}_misses"] = misses
        out.check(ok, f"{what}:mismatch")
    return out


def _expect(expected: Optional[Mapping[str, Any]], key: str, actual, out: Outcome) -> None:
    if expected and key in expected:
        out.check(bool(actual) == bool(expected[key]), f"{key}:expected-{str(bool(expected[key])).lower()}")


# operations

def _run_subdiff(s: Scenario, tol: Tolerances) -> Outcome:
    f = ScenarioLoader.function(s.inputs["f"])
    x_bar = ScenarioLoader.point(s.inputs["x_bar"])
    if s.inputs.get("method", "set") == "eta-intersection":
        dset = subdiff_via_eps_intersection(f, x_bar, tol)
    else:
        dset = eps_subdiff_set(EpsSubdiffQuery(f, x_bar, float(s.inputs["eps"]), tol))
    return compare_set(dset, s.expected, tol)


def _run_conjugate(s: Scenario, tol: Tolerances) -> Outcome:
    f = ScenarioLoader.function(s.inputs["f"])
    S = ScenarioLoader.points(s.inputs["points"])
    values, flags = conjugate_at(f, S, tol)
    out = Outcome(computed={"values": [None if np.isposinf(v) else float(v) for v in values]})
    if flags.any():
        out.flags.append(WINDOW_FLAG)
    if s.expected and "values" in s.expected:
        target = np.array([ext_real(v) for v in s.expected["values"]])
        limit = tol.set_tol if f.has_closed_conjugate else tol.conj_tol(tol.primal_grid(f.dim), float(np.abs(S).max()))
        same_inf = np.isinf(values) & np.isinf(target) & (np.sign(values) == np.sign(target))
        with np.errstate(invalid="ignore"):
            gap = np.where(same_inf, 0.0, np.abs(values - target))
        out.hausdorff_error = float(np.nanmax(gap)) if gap.size else 0.0
        out.check(bool(np.all(gap <= limit)), "values:mismatch")
    return out


def _run_biconjugate(s: Scenario, tol: Tolerances) -> Outcome:
    f = ScenarioLoader.function(s.inputs["f"])
    grid = tol.primal_grid(f.dim)
    f2 = biconjugate(f, grid, tol)
    fx = f.evaluate(grid.points())
    bx = np.ravel(f2.values)
    finite = np.isfinite(fx)
    gap = np.where(finite, fx - np.where(np.isfinite(bx), bx, fx), 0.0)
    limit = tol.conj_tol(grid, tol.window_radius)
    closed = bool(np.all(np.abs(gap[finite]) <= limit))
    out = Outcome(computed={"max_gap": float(np.abs(gap).max()), "closed": closed}, hausdorff_error=float(np.abs(gap).max()))
    out.check(bool(np.all(gap >= -limit)), "biconjugate-above-f")
    _expect(s.expected, "closed", closed, out)
    return out


def _run_lsc(s: Scenario, tol: Tolerances) -> Outcome:
    f = ScenarioLoader.function(s.inputs["f"])
    lsc = check_lsc_on_grid(f, tol.primal_grid(f.dim), tol)
    out = Outcome(computed={"lsc": lsc})
    _expect(s.expected, "lsc", lsc, out)
    return out


def _run_regularity(s: Scenario, tol: Tolerances) -> Outcome:
    f1 = ScenarioLoader.function(s.inputs["f1"])
    f2 = ScenarioLoader.function(s.inputs["f2"])
    verdicts = check_regularity(f1, f2, tol)
    out = Outcome(computed=dict(verdicts))
    out.check(verdicts_consistent(verdicts), "inconsistent-verdicts")
    for key in ("mr", "ab", "bs"):
        _expect(s.expected, key, verdicts[key], out)
    out.figures.append(("implications", verdicts, None))
    return out


def _run_polar(s: Scenario, tol: Tolerances) -> Outcome:
    return compare_set(polar(ScenarioLoader.convex_set(s.inputs["set"]), tol), s.expected, tol)


def _run_normal(s: Scenario, tol: Tolerances) -> Outcome:
    C = ScenarioLoader.convex_set(s.inputs["set"])
    x_bar = ScenarioLoader.point(s.inputs["x_bar"])
    eps = float(s.inputs["eps"])
    if s.inputs.get("cone"):
        if not isinstance(C, Cone):
            raise EpsKitError(f"Scenario {s.name} asks for the cone route on a {type(C).__name__}")
        dset = cone_eps_normals(C, x_bar, eps, tol)
    else:
        dset = eps_normal_set(C, x_bar, eps, tol)
    return compare_set(dset, s.expected, tol)


def _run_sum_rule(s: Scenario, tol: Tolerances) -> Outcome:
    f1 = ScenarioLoader.function(s.inputs["f1"])
    f2 = ScenarioLoader.function(s.inputs["f2"])
    x_bar = ScenarioLoader.point(s.inputs["x_bar"])
    eps = float(s.inputs["eps"])
    r = sum_rule_eval(f1, f2, x_bar, eps, tol)
    expected = s.expected or {}
    out = Outcome(hausdorff_error=float(r["hausdorff_error"]))
    for side in ("lhs", "rhs"):
        part = compare_set(r[side], expected.get(side), tol, what=side)
        out.merge(part, side)
    out.computed.update({"equal_on_window": r["equal_on_window"], "condition_H": r["condition_H"], "certified": r["certified"]})
    _expect(expected, "equal", r["equal_on_window"], out)
    _expect(expected, "condition_H", r["condition_H"], out)
    condition = expected.get("condition_H_at")
    if condition:
        check = check_condition_H(f1, f2, ScenarioLoader.point(condition["point"]), tol=tol)
        out.computed["condition_H_at"] = {"holds_as_inf": check["holds_as_inf"], "attained": check["attained"]}
        _expect(condition, "holds_as_inf", check["holds_as_inf"], out)
        _expect(condition, "attained", check["attained"], out)
    return out


def _run_scaling(s: Scenario, tol: Tolerances) -> Outcome:
    f = ScenarioLoader.function(s.inputs["f"])
    holds = scale_rule_check(f, ScenarioLoader.point(s.inputs["x_bar"]), float(s.inputs["eps"]), float(s.inputs["lam"]), tol)
    out = Outcome(computed={"holds": holds})
    _expect(s.expected or {"holds": True}, "holds", holds, out)
    return out


def _run_separable(s: Scenario, tol: Tolerances) -> Outcome:
    r = separable_inclusions_check(
        ScenarioLoader.function(s.inputs["f1"]),
        ScenarioLoader.function(s.inputs["f2"]),
        ScenarioLoader.point(s.inputs["x_bar"]),
        ScenarioLoader.point(s.inputs["y_bar"]),
        float(s.inputs["eps"]),
        tol,
    )
    out = Outcome(computed={"inner": r["inner"], "outer": r["outer"], "counts": list(r["counts"])})
    expected = s.expected or {"inner": True, "outer": True}
    _expect(expected, "inner", r["inner"], out)
    _expect(expected, "outer", r["outer"], out)
    return out


def _run_epigraph_link(s: Scenario, tol: Tolerances) -> Outcome:
    f = ScenarioLoader.function(s.inputs["f"])
    holds = epigraph_link_check(f, ScenarioLoader.point(s.inputs["x_bar"]), float(s.inputs["eps"]), tol)
    out = Outcome(computed={"holds": holds})
    _expect(s.expected or {"holds": True}, "holds", holds, out)
    return out


def _run_value_fn(s: Scenario, tol: Tolerances) -> Outcome:
    p = ScenarioLoader.problem(s.inputs["problem"])
    X = ScenarioLoader.points(s.inputs["points"])
    values = value_function(p, tol).evaluate(X)
    out = Outcome(computed={"values": [None if np.isposinf(v) else float(v) for v in values]})
    if s.expected and "values" in s.expected:
        target = np.array([ext_real(v) for v in s.expected["values"]])
        both_inf = np.isposinf(values) & np.isposinf(target)
        with np.errstate(invalid="ignore"):
            gap = np.where(both_inf, 0.0, np.abs(values - target))
        out.hausdorff_error = float(np.nanmax(gap))
        out.check(bool(np.all(gap <= tol.set_tol)), "values:mismatch")
    return out


def _value_rule_outcome(r: Dict[str, Any], s: Scenario, tol: Tolerances) -> Outcome:
    out = Outcome()
    for key in ("direct", "formula_meta", "formula_union"):
        out.merge(compare_set(r[key], s.expected, tol, what=key), key)
    out.hausdorff_error = max(out.hausdorff_error, float(r["hausdorff_error"]))
    out.computed["agree"] = r["agree"]
    out.check(r["agree"], "formulas-disagree")
    return out


def _run_unconstrained_value(s: Scenario, tol: Tolerances) -> Outcome:
    p = ScenarioLoader.problem(s.inputs["problem"])
    x_bar = ScenarioLoader.point(s.inputs["x_bar"])
    eps = float(s.inputs["eps"])
    out = _value_rule_outcome(unconstrained_eps_subdiff(p, x_bar, eps, tol), s, tol)
    if "y_sol" in s.inputs:
        single = unconstrained_solution_case(p, x_bar, eps, ScenarioLoader.point(s.inputs["y_sol"]), tol)
        out.computed["single_solution"] = single
        out.check(single, "single-solution:mismatch")
    if s.inputs.get("convergence"):
        out.convergence = eta_convergence_table(p, x_bar, eps, tol=tol)
    return out


def _run_constrained_value(s: Scenario, tol: Tolerances) -> Outcome:
    p = ScenarioLoader.problem(s.inputs["problem"])
    x_bar = ScenarioLoader.point(s.inputs["x_bar"])
    eps = float(s.inputs["eps"])
    r = constrained_eps_subdiff(p, x_bar, eps, tol)
    out = _value_rule_outcome(r, s, tol)
    regularity = r["regularity"]
    out.computed["regularity"] = regularity
    if regularity["state"] != "CERTIFIED":
        out.flags.append("UNCERTIFIED")
    for key, wanted in (s.inputs.get("regularity") or {}).items():
        out.check(regularity.get(key) == wanted, f"regularity-{key}")
    normal = s.inputs.get("graph_normal")
    if normal:
        dset = eps_normal_set(p.graph, ScenarioLoader.point(normal["point"]), float(normal.get("eps", eps)), tol)
        out.merge(compare_set(dset, normal.get("expected"), tol, what="graph_normal"), "graph_normal")
    if s.inputs.get("convergence"):
        out.convergence = eta_convergence_table(p, x_bar, eps, tol=tol)
    return out


def _run_reduction(s: Scenario, tol: Tolerances) -> Outcome:
    r = reduction_identity_check(ScenarioLoader.problem(s.inputs["problem"]), tol=tol)
    out = Outcome(computed=dict(r), hausdorff_error=float(r["max_gap"]))
    _expect(s.expected or {"holds": True}, "holds", r["holds"], out)
    return out


OPERATIONS: Dict[str, Callable[[Scenario, Tolerances], Outcome]] = {
    "subdiff": _run_subdiff,
    "conjugate": _run_conjugate,
    "biconjugate": _run_biconjugate,
    "lsc": _run_lsc,
    "regularity": _run_regularity,
    "polar": _run_polar,
    "normal": _run_normal,
    "sum-rule": _run_sum_rule,
    "scaling": _run_scaling,
    "separable": _run_separable,
    "epigraph-link": _run_epigraph_link,
    "value-fn": _run_value_fn,
    "unconstrained-value": _run_unconstrained_value,
    "constrained-value": _run_constrained_value,
    "reduction": _run_reduction,
}


def _cases(s: Scenario) -> List[Tuple[str, Scenario]]:
    """A list-valued eps runs once per entry, paired with a list of expectations."""
    eps = s.inputs.get("eps")
    if not isinstance(eps, list):
        return [("", s)]
    expected = s.expected if isinstance(s.expected, list) else [s.expected] * len(eps)
    if len(expected) != len(eps):
        raise EpsKitError(f"Scenario {s.name} has {len(eps)} eps values but {len(expected)} expectations")
    return [
        (f"eps={e:g}", replace(s, inputs={**s.inputs, "eps": e}, expected=x))
        for e, x in zip(eps, expected)
    ]


def _write_figures(report: RunReport, figures, output: OutputSettings, tol: Tolerances) -> None:
    visualizer = SetVisualizer(tol)
    for name, subject, overlay in figures:
        stem = f"{report.scenario}_{name}".replace("=", "").replace(" ", "_")
        path = Path(output.out_dir) / f"{stem}.svg"
        if isinstance(subject, DualSet):
            report.figures.append(visualizer.render_dual_set(subject, path, overlay=overlay, title=report.scenario))
        else:
            report.figures.append(visualizer.render_implication_graph(subject, path, title=report.scenario))


def run_scenario(
    scenario,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Mapping[str, str] = os.environ,
    output: Optional[OutputSettings] = None,
    timing: bool = True,
) -> RunReport:
    """Load (if given a path), execute and check one scenario.

    Tolerances resolve as defaults, EPSKIT_* variables, the scenario's own
    overrides, then the caller's overrides.
    """
    if not isinstance(scenario, Scenario):
        scenario = ScenarioLoader.load_scenario(scenario)
    tol = load_tolerances(scenario.tolerances, environ)
    tol = load_tolerances(overrides, environ={}, base=tol)
    logging.info(f"Running scenario {scenario.name} ({scenario.operation})")
    handler = OPERATIONS[scenario.operation]
    start = time.perf_counter()
    combined = Outcome()
    try:
        for label, case in _cases(scenario):
            outcome = handler(case, tol)
            if label:
                combined.merge(outcome, label)
            else:
                combined = outcome
    except WindowTooSmall as e:
        logging.warning(f"Scenario {scenario.name}: {e}")
        combined.passed = False
        combined.flags.append(WINDOW_FLAG)
    except EpsKitError as e:
        logging.error(f"Scenario {scenario.name} failed: {e}")
        raise
    millis = (time.perf_counter() - start) * 1000.0 if timing else None
    passed = combined.passed and WINDOW_FLAG not in combined.flags
    report = RunReport(
        scenario=scenario.name,
        operation=scenario.operation,
        passed=bool(passed),
        hausdorff_error=float(combined.hausdorff_error),
        flags=combined.flags,
        millis=millis,
        computed=combined.computed,
        convergence=combined.convergence,
        description=scenario.description,
        ref=scenario.ref,
    )
    if output is not None and output.wants_svg and combined.figures:
        _write_figures(report, combined.figures, output, tol)
    logging.info(f"Scenario {scenario.name}: {'pass' if passed else 'FAIL'} {sorted(set(combined.flags))}")
    return report


def report_table(reports: Iterable[RunReport]) -> pd.DataFrame:
    rows = [r.to_row() for r in reports]
    table = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    return table.sort_values("scenario", kind="mergesort").reset_index(drop=True)


def write_report_csv(table: pd.DataFrame, path) -> Path:
    """CSV with fixed float formatting; identical tables give identical bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = table.copy()
    out["pass"] = out["pass"].map(lambda v: "true" if v else "false")
    out["hausdorff_error"] = out["hausdorff_error"].map(lambda v: "inf" if np.isinf(v) else f"{v:.6g}")
    out["millis"] = out["millis"].map(lambda v: "" if v is None or pd.isna(v) else f"{v:.1f}")
    out.to_csv(path, index=False, lineterminator="\n")
    logging.info(f"Wrote {len(out)} report rows to {path}")
    return path


def run_suite(
    paths: Optional[Iterable[Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Mapping[str, str] = os.environ,
    output: Optional[OutputSettings] = None,
    timing: bool = True,
) -> Tuple[pd.DataFrame, List[RunReport]]:
    """Run every bundled fixture (or the given paths); rows come back sorted by scenario."""
    paths = list(paths) if paths is not None else ScenarioLoader.fixture_paths()
    logging.info(f"Running {len(paths)} scenarios")
    reports = []
    for path in paths:
        scenario = ScenarioLoader.load_scenario(path)
        try:
            reports.append(run_scenario(scenario, overrides, environ, output, timing))
        except EpsKitError as e:
            reports.append(RunReport(scenario.name, scenario.operation, False, INF, [type(e).__name__],
                                     None, description=scenario.description, ref=scenario.ref))
    table = report_table(reports)
    table["ref"] = table["scenario"].map({r.scenario: r.ref for r in reports})
    table["description"] = table["scenario"].map({r.scenario: r.description for r in reports})
    if output is not None and output.wants_csv:
        write_report_csv(table[REPORT_COLUMNS], Path(output.out_dir) / "report.csv")
        for r in reports:
            if r.convergence is not None:
                r.convergence.to_csv(Path(output.out_dir) / f"{r.scenario}_convergence.csv", index=False,
                                     float_format="%.6g", lineterminator="\n")
    return table, sorted(reports, key=lambda r: r.scenario)


def exit_code(table: pd.DataFrame) -> int:
    return 0 if bool(table["pass"].all()) else 1
