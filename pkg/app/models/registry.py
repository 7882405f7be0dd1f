from typing import Any, Callable, Dict, Optional

from app.exceptions import ConfigError
from app.models.cournot import build_cournot
from app.models.demand_response import build_demand_response
from app.schemas.game_schema import AggregativeGame

BUILTIN_MODELS: Dict[str, Callable[[Optional[Dict[str, Any]]], AggregativeGame]] = {
    "cournot": build_cournot,
    "demand_response": build_demand_response,
}


def build_model(name: str, overrides: Optional[Dict[str, Any]] = None) -> AggregativeGame:
    builder = BUILTIN_MODELS.get(name)
    if builder is None:
        raise ConfigError(f"Unknown model '{name}'; choose one of {sorted(BUILTIN_MODELS)}")
    try:
        return builder(overrides)
    except ValueError as e:
        raise ConfigError(f"Invalid parameters for model '{name}': {e}") from e
