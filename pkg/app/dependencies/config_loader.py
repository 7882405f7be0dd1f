import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple

from pydantic import ValidationError

from app.exceptions import ConfigError
from app.schemas.config_schema import ApproxSpec, ExperimentConfig

logger = logging.getLogger(__name__)

SECTIONS = ("model", "graph", "approx", "solver", "output")


def parse_value(raw: str) -> Any:
    """none / true / false, ints, floats, comma lists of numbers, else the string"""
    text = raw.strip()
    lowered = text.lower()
    if lowered in ("none", "null", ""):
        return None
    if lowered in ("true", "false"):
        return lowered == "true"
    if "," in text:
        try:
            return tuple(float(part) for part in text.split(","))
        except ValueError:
            return text
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_lines(lines: Iterable[str]) -> Dict[str, Tuple[Any, int]]:
    '''
    Flat dotted key-value text, one `section.key = value` per line.
    `#` starts a comment. Returns {dotted key: (value, line number)}.
    '''
    entries: Dict[str, Tuple[Any, int]] = {}
    for number, line in enumerate(lines, start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        key, sep, raw = content.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {number}: expected 'key = value', got '{content}'")
        section = key.split(".", 1)[0]
        if section not in SECTIONS:
            raise ConfigError(f"line {number}: unknown section '{section}' in key '{key}'")
        if key in entries:
            raise ConfigError(f"line {number}: duplicate key '{key}' (first set on line {entries[key][1]})")
        entries[key] = (parse_value(raw), number)
    return entries


def _nest(entries: Dict[str, Tuple[Any, int]]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {"model": {"params": {}}}
    for key, (value, number) in entries.items():
        section, _, field = key.partition(".")
        if section == "approx" and not field:
            try:
                nested["approx"] = ApproxSpec.parse(str(value)).model_dump()
            except (ValueError, ValidationError) as e:
                raise ConfigError(f"line {number}: {e}") from e
            continue
        if not field:
            raise ConfigError(f"line {number}: key '{key}' needs a field name")
        if section == "model" and field != "name":
            nested["model"]["params"][field] = value
            continue
        nested.setdefault(section, {})[field] = value
    return nested


def _line_of(entries: Dict[str, Tuple[Any, int]], loc: Tuple[Any, ...]) -> str:
    dotted = ".".join(str(part) for part in loc if part != "params")
    if dotted in entries:
        return f"line {entries[dotted][1]}: "
    return ""


def build_config(entries: Dict[str, Tuple[Any, int]]) -> ExperimentConfig:
    nested = _nest(entries)
    try:
        return ExperimentConfig(**nested)
    except ValidationError as e:
        error = e.errors()[0]
        where = ".".join(str(part) for part in error["loc"])
        logger.error(f"Invalid config field {where}: {error['msg']}")
        raise ConfigError(f"{_line_of(entries, error['loc'])}{where}: {error['msg']}") from e


def load_config(
    path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    '''
    Read a config file (optional) and apply dotted-key overrides from CLI flags.

    Raises:
        ConfigError: unreadable file, malformed line, unknown key or invalid value
    '''
    entries: Dict[str, Tuple[Any, int]] = {}
    if path:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"Cannot read config file {path}: {e.strerror}") from e
        entries = parse_lines(text.splitlines())
        logger.info(f"Loaded {len(entries)} keys from {path}")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key.split(".", 1)[0] not in SECTIONS:
            raise ConfigError(f"Unknown section in override key '{key}'")
        entries[key] = (parse_value(value) if isinstance(value, str) else value, 0)
    if "model.name" not in entries:
        raise ConfigError("model.name is required (use --model or a config file)")
    return build_config(entries)
