from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Dict, Mapping, Optional

import pandas as pd
from pydantic import ValidationError

from sav_bottleneck.core.errors import ConfigError
from sav_bottleneck.core.params import PARAM_FIELDS, ModelParams
from sav_bottleneck.schemas.scenario import ScenarioConfig

FLOAT_FORMAT = "%.12g"


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read a flat JSON scenario file into a ScenarioConfig."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found at path: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"Config {path} must hold a flat key-value object")
    data.setdefault("name", path.stem)
    try:
        return ScenarioConfig.from_flat(data)
    except (ValidationError, TypeError) as exc:
        raise ConfigError(f"Config {path} rejected: {exc}") from exc


def params_header(params: ModelParams, extra: Optional[Mapping[str, object]] = None) -> str:
    lines = [f"# {name}={getattr(params, name)!r}" for name in PARAM_FIELDS]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}={value}")
    return "\n".join(lines) + "\n"


def write_csv(
    df: pd.DataFrame,
    output_path: str | Path,
    params: ModelParams,
    extra: Optional[Mapping[str, object]] = None,
) -> Path:
    """Write a table preceded by a `# key=value` block echoing every parameter."""
    output = Path(output_path)
    output.parent.mkdir(parents=True, exist_ok=True)
    with output.open("w", encoding="utf-8", newline="") as fh:
        fh.write(params_header(params, extra))
        df.to_csv(fh, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return output


def read_params_header(path: str | Path) -> ModelParams:
    """Recover the ModelParams echoed in a CSV header block."""
    values: Dict[str, float] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            if key in PARAM_FIELDS:
                values[key] = float(value)
    missing = [k for k in PARAM_FIELDS if k not in values]
    if missing:
        raise ConfigError(f"CSV header in {path} lacks parameters: {missing}")
    return ModelParams(**values)


def read_table(path: str | Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_summary(summary: Mapping[str, object], output_path: str | Path) -> Path:
    output = Path(output_path)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(json.dumps(_jsonable(dict(summary)), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return output


__all__ = [
    "load_scenario",
    "params_header",
    "write_csv",
    "read_params_header",
    "read_table",
    "write_summary",
]
