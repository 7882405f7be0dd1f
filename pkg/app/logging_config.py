import logging
import sys

from pythonjsonlogger.json import JsonFormatter

from app import settings

_handler: logging.StreamHandler | None = None


def configure_logging(level: str | None = None, json_logs: bool | None = None) -> None:
    """Attach one stderr handler to the root logger; later calls replace it"""
    global _handler

    root = logging.getLogger()
    root.setLevel((level or settings.LOG_LEVEL).upper())

    if _handler is not None:
        root.removeHandler(_handler)
    _handler = logging.StreamHandler(sys.stderr)
    root.addHandler(_handler)

    use_json = settings.LOG_JSON if json_logs is None else json_logs
    if use_json:
        _handler.setFormatter(JsonFormatter("%(asctime)s %(levelname)s %(name)s %(message)s"))
    else:
        _handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)-7s %(name)s: %(message)s"))
