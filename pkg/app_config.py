import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional

from src.errors import SchemaError
from src.numerics import DEFAULT_TOLERANCES, Tolerances

ENV_PREFIX = "EPSKIT_"

# environment variable suffix -> Tolerances field
TOLERANCE_VARS = {
    "WINDOW": "window_radius",
    "SET_TOL": "set_tol",
    "ETA_LADDER": "eta_ladder",
    "GAMMA_SPLITS": "gamma_splits",
    "DIRS": "support_dirs",
}

REPORT_FORMATS = ("csv", "svg", "both")


@dataclass(frozen=True)
class OutputSettings:
    out_dir: str = "reports"
    format: str = "csv"

    @property
    def wants_csv(self) -> bool:
        return self.format in ("csv", "both")

    @property
    def wants_svg(self) -> bool:
        return self.format in ("svg", "both")


def _parse(field_name: str, raw: Any):
    try:
        if field_name == "eta_ladder":
            if isinstance(raw, str):
                raw = [part for part in raw.split(",") if part.strip()]
            return tuple(float(v) for v in raw)
        if field_name in ("gamma_splits", "support_dirs"):
            return int(raw)
        return float(raw)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"Bad value {raw!r} for {field_name}") from e


def load_tolerances(
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Mapping[str, str] = os.environ,
    base: Tolerances = DEFAULT_TOLERANCES,
) -> Tolerances:
    """Defaults, then EPSKIT_* variables, then explicit overrides (scenario or CLI)."""
    changes: Dict[str, Any] = {}
    for suffix, field_name in TOLERANCE_VARS.items():
        raw = environ.get(ENV_PREFIX + suffix)
        if raw not in (None, ""):
            changes[field_name] = _parse(field_name, raw)
    for field_name, raw in (overrides or {}).items():
        if field_name not in Tolerances.__dataclass_fields__:
            raise SchemaError(f"Unknown tolerance {field_name!r}")
        if raw is not None:
            changes[field_name] = _parse(field_name, raw) if field_name != "member_tol" else float(raw)
    try:
        return base.replace(**changes)
    except ValueError as e:
        raise SchemaError(str(e)) from e


def load_output_settings(
    out_dir: Optional[str] = None,
    fmt: Optional[str] = None,
    environ: Mapping[str, str] = os.environ,
) -> OutputSettings:
    out_dir = out_dir or environ.get(ENV_PREFIX + "OUT_DIR") or OutputSettings.out_dir
    fmt = fmt or environ.get(ENV_PREFIX + "FORMAT") or OutputSettings.format
    if fmt not in REPORT_FORMATS:
        raise SchemaError(f"Report format must be one of {list(REPORT_FORMATS)}, got {fmt!r}")
    return OutputSettings(out_dir=out_dir, format=fmt)


def configure_logging(environ: Mapping[str, str] = os.environ) -> int:
    """Apply EPSKIT_LOG_LEVEL to the root logger; returns the level in use."""
    name = environ.get(ENV_PREFIX + "LOG_LEVEL", "INFO").upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        raise SchemaError(f"Unknown log level {name!r}")
    logging.getLogger().setLevel(level)
    return level
