import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from src.errors import ParseError, SchemaError
from src.functions import ConvexFn, function_from_json
from src.numerics import INF
from src.parametric import ParametricProblem
from src.sets import ConvexSetDesc, set_from_json

# Configure logging once at the top-level of your app
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

FIXTURES_DIR = Path(__file__).resolve().parent.parent / "fixtures"


def load_operation_types(json_path: Path):
    logging.info(f"Loading operation types from {json_path}")
    with json_path.open('r', encoding='utf-8') as f:
        ops = json.load(f)
    # validate keys
    for i, obj in enumerate(ops):
        if not all(k in obj for k in ("value", "label", "description", "required")):
            raise SchemaError(f"Entry {i} missing one of ['value','label','description','required']")
    return ops


OPERATION_TYPES_FILE = Path(__file__).parent / "operation_types.json"
OPERATION_TYPES = load_operation_types(OPERATION_TYPES_FILE)
REQUIRED_INPUTS = {op["value"]: tuple(op["required"]) for op in OPERATION_TYPES}


@dataclass(frozen=True)
class Scenario:
    name: str
    operation: str
    inputs: Dict[str, Any]
    expected: Optional[Any] = None
    tolerances: Dict[str, Any] = field(default_factory=dict)
    description: str = ""
    # free-form cross-reference for the case a scenario reproduces
    ref: str = ""
    path: Optional[Path] = None


def ext_real(value) -> float:
    """JSON scalar to an extended real: null or "inf" is +inf, "-inf" is -inf."""
    if value is None or value == "inf":
        return INF
    if value == "-inf":
        return -INF
    return float(value)


class ScenarioLoader:
    @staticmethod
    def load_json(path: Path) -> Dict[str, Any]:
        logging.info(f"Loading scenario from {path}")
        try:
            with Path(path).open('r', encoding='utf-8') as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            logging.error(f"Error parsing {path}: {e}")
            raise ParseError(f"{path}: {e}") from e
        except OSError as e:
            logging.error(f"Error reading {path}: {e}")
            raise ParseError(f"{path}: {e}") from e

    @staticmethod
    def validate(doc: Dict[str, Any], source: str = "<memory>") -> None:
        if not isinstance(doc, dict):
            raise SchemaError(f"Scenario {source} must be a JSON object")
        if not all(k in doc for k in ("name", "operation", "inputs")):
            raise SchemaError(f"Scenario {source} missing one of ['name','operation','inputs']")
        operation = doc["operation"]
        if operation not in REQUIRED_INPUTS:
            raise SchemaError(f"Scenario {doc['name']} has unknown operation {operation!r}")
        missing = [k for k in REQUIRED_INPUTS[operation] if k not in doc["inputs"]]
        if missing:
            raise SchemaError(f"Scenario {doc['name']} missing one of {list(REQUIRED_INPUTS[operation])}: {missing}")
        if not isinstance(doc.get("tolerances", {}), dict):
            raise SchemaError(f"Scenario {doc['name']} tolerances must be an object")

    @staticmethod
    def from_dict(doc: Dict[str, Any], path: Optional[Path] = None) -> Scenario:
        try:
            ScenarioLoader.validate(doc, str(path or "<memory>"))
        except SchemaError as e:
            logging.error(f"Invalid scenario: {e}")
            raise
        return Scenario(
            name=str(doc["name"]),
            operation=doc["operation"],
            inputs=doc["inputs"],
            expected=doc.get("expected"),
            tolerances=dict(doc.get("tolerances", {})),
            description=str(doc.get("description", "")),
            ref=str(doc.get("ref", "")),
            path=path,
        )

    @staticmethod
    def load_scenario(path) -> Scenario:
        path = Path(path)
        return ScenarioLoader.from_dict(ScenarioLoader.load_json(path), path)

    @staticmethod
    def fixture_paths(directory: Path = FIXTURES_DIR) -> List[Path]:
        return sorted(Path(directory).glob("*.json"))

    # AST nodes
    @staticmethod
    def function(obj) -> ConvexFn:
        return function_from_json(obj)

    @staticmethod
    def convex_set(obj) -> ConvexSetDesc:
        return set_from_json(obj)

    @staticmethod
    def problem(obj) -> ParametricProblem:
        try:
            graph = obj.get("graph")
            return ParametricProblem(
                phi=function_from_json(obj["phi"]),
                m=int(obj["m"]),
                k=int(obj["k"]),
                graph=None if graph is None else set_from_json(graph),
            )
        except KeyError as e:
            raise SchemaError(f"Problem node missing field {e}") from e

    @staticmethod
    def point(value) -> np.ndarray:
        return np.atleast_1d(np.asarray(value, dtype=float))

    @staticmethod
    def points(value) -> np.ndarray:
        arr = np.asarray(value, dtype=float)
        return arr.reshape(-1, 1) if arr.ndim == 1 else arr


def load_scenario(path) -> Scenario:
    return ScenarioLoader.load_scenario(path)
