"""Pydantic base for JSON config documents and the mapping of their validation errors.

A ``ValidationError`` is reported as a ``ConfigError`` whose path names the
first offending field the way it appears in the JSON, e.g.
``grid.branches[1].shunt_c``.
"""

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, ValidationError

from .errors import ConfigError, GridscanError, MissingInputError

__all__ = ["ConfigModel", "dotted_path", "config_error", "validate_document"]


class ConfigModel(BaseModel):
    """Frozen, closed model: unknown keys are errors. Scalar fields use the Strict* types."""

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)


def dotted_path(loc: tuple[Any, ...], root: str = "") -> str:
    path = root
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path = f"{path}.{part}" if path else str(part)
    return path


def config_error(exc: ValidationError, root: str = "") -> GridscanError:
    """Translate the first validation error into the error the CLI reports.

    A ``ConfigError`` or ``MissingInputError`` raised inside a validator
    already knows its path and passes through unchanged.
    """
    first = exc.errors()[0]
    cause = first.get("ctx", {}).get("error")
    if isinstance(cause, (ConfigError, MissingInputError)):
        return cause
    message = str(cause) if isinstance(cause, Exception) else first["msg"]
    return ConfigError(message, dotted_path(first["loc"], root) or None)


def validate_document(model: type[BaseModel], data: Any, root: str = "", context: Optional[dict] = None) -> Any:
    """``model.model_validate`` with failures raised as gridscan errors."""
    try:
        return model.model_validate(data, context=context)
    except ValidationError as e:
        raise config_error(e, root) from e
