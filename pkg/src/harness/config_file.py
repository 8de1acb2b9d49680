"""Line-oriented `key = value` experiment files with dotted keys."""
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from src.core.errors import IoError, ParameterError
from src.harness.experiment import ExperimentConfig

# Section names accepted for top-level sweep keys (sweep.points = ...)
_TOP_LEVEL_SECTIONS = ("sweep", "run")


def _nested_model(model: type[BaseModel], name: str):
    field = model.model_fields.get(name)
    if field is None:
        return None
    annotation = field.annotation
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    return None


def _check_key(parts: list[str], line_no: int, key: str) -> None:
    model = ExperimentConfig
    for depth, part in enumerate(parts):
        if part not in model.model_fields:
            raise ParameterError(f"line {line_no}: unknown key {key!r}")
        if depth < len(parts) - 1:
            model = _nested_model(model, part)
            if model is None:
                raise ParameterError(f"line {line_no}: {key!r} does not name a section")


def parse_config_text(text: str) -> dict[str, Any]:
    """
    Parse config text into a nested dict of raw strings.

    `#` starts a comment; blank lines are skipped. Value coercion is left to
    the pydantic models.

    Raises:
        ParameterError: malformed line, unknown or repeated key
    """
    values: dict[str, Any] = {}
    seen = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {line_no}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParameterError(f"line {line_no}: missing key")
        if key in seen:
            raise ParameterError(f"line {line_no}: key {key!r} set twice")
        seen.add(key)

        parts = key.split(".")
        if len(parts) > 1 and parts[0] in _TOP_LEVEL_SECTIONS:
            parts = parts[1:]
        _check_key(parts, line_no, key)

        node = values
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return values


def parse_config_file(path: Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot read config file {path}: {e}") from e
    return parse_config_text(text)


def merge_overrides(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Deep-merge overrides onto base; override leaves win."""
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_overrides(merged[key], value)
        else:
            merged[key] = value
    return merged


def build_experiment_config(file_values: dict[str, Any], overrides: dict[str, Any]) -> ExperimentConfig:
    return ExperimentConfig(**merge_overrides(file_values, overrides))
