"""
ParamMap handling.

A ParamMap is a plain ``Dict[str, Any]``. Every configurable component owns a
pydantic model describing the names it accepts; `parse_params` validates a
ParamMap against such a model and turns pydantic's error into an
`InvalidParameterError` naming the component.
"""
from typing import Any, Dict, Optional, Type, TypeVar

from pydantic import BaseModel, ConfigDict, ValidationError

from ssl_forge.core.exceptions import InvalidParameterError


ParamMap = Dict[str, Any]

P = TypeVar("P", bound=BaseModel)


class ComponentParams(BaseModel):
    """Base for component parameter models: unknown names are rejected."""
    model_config = ConfigDict(extra="forbid", frozen=True)


class NoParams(ComponentParams):
    """Parameter model for components without parameters."""


def parse_params(model: Type[P], params: Optional[ParamMap], component: str) -> P:
    """Validate a ParamMap against `model`."""
    try:
        return model(**(params or {}))
    except ValidationError as e:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}"
            for err in e.errors()
        )
        raise InvalidParameterError(f"invalid parameter for {component}: {details}") from e
    except TypeError as e:
        raise InvalidParameterError(f"invalid parameter for {component}: {e}") from e


def params_to_dict(params: BaseModel) -> ParamMap:
    """JSON-safe dump of a parameter model."""
    return params.model_dump(mode="json")
