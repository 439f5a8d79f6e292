"""
Utility functions for reading and writing speclink artifacts as JSON.

Floats are written with 17 significant digits so that every double survives a
write/read cycle unchanged and re-serialising a parsed file is byte-stable.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from speclink.errors import ConfigError, InputDataError, NonFiniteError
from speclink.schemas import ExperimentConfig

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)


def format_float(value: float) -> str:
    if not math.isfinite(value):
        raise NonFiniteError(f"cannot serialise non-finite value {value!r}")
    text = format(value, ".17g")
    if "e" not in text and "." not in text:
        text += ".0"
    return text


def _encode(value: Any, indent: int, level: int) -> str:
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (int, str)):
        return json.dumps(value, ensure_ascii=False)
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_encode(v, indent, level + 1)}" for k, v in value.items()]
        return "{" + ",".join(items) + end + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        # Numeric rows stay on one line.
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in value) + "]"
        return "[" + ",".join(f"{pad}{_encode(v, indent, level + 1)}" for v in value) + end + "]"
    raise TypeError(f"cannot serialise {type(value).__name__}")


def dumps(data: Any, indent: int = 2) -> str:
    """JSON text with 17-significant-digit floats."""
    return _encode(data, indent, 0) + "\n"


class ModelValidator:
    """Handles validation and conversion of JSON artifacts to pydantic models."""

    @staticmethod
    def model_to_json(model: BaseModel, indent: int = 2) -> str:
        return dumps(model.model_dump(mode="json", by_alias=True, exclude_none=True), indent=indent)

    @staticmethod
    def validate_dict(data: Dict[str, Any], model_class: Type[ModelT]) -> ModelT:
        try:
            return model_class.model_validate(data)
        except ValidationError as e:
            error_cls = ConfigError if model_class is ExperimentConfig else InputDataError
            raise error_cls(f"invalid {model_class.__name__}: {e}") from e

    @staticmethod
    def validate_file(file_path: Union[str, Path], model_class: Type[ModelT]) -> ModelT:
        """Load a JSON file into ``model_class``; config errors map to ConfigError, the rest to InputDataError."""
        error_cls = ConfigError if model_class is ExperimentConfig else InputDataError
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError as e:
            raise error_cls(f"file not found: {file_path}") from e
        except json.JSONDecodeError as e:
            raise error_cls(f"invalid JSON in {file_path}: {e}") from e
        if not isinstance(data, dict):
            raise error_cls(f"{file_path} does not hold a JSON object")
        model = ModelValidator.validate_dict(data, model_class)
        logger.debug(f"Loaded {model_class.__name__} from {file_path}")
        return model

    @staticmethod
    def save_model_to_file(model: BaseModel, file_path: Union[str, Path]) -> Path:
        path = Path(file_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(ModelValidator.model_to_json(model))
        logger.info(f"Saved {type(model).__name__} to {path}")
        return path
