import logging
import os

from dotenv import find_dotenv, load_dotenv

logger = logging.getLogger(__name__)

# Environment is resolved once at import; CLI flags override per invocation
dotenv_path = find_dotenv(usecwd=True)
if dotenv_path:
    load_dotenv(dotenv_path, override=False)


def _env_bool(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


def get_thread_cap() -> int:
    """Worker pool width cap from AGGSOLVE_THREADS (defaults to the CPU count)"""
    raw = os.getenv("AGGSOLVE_THREADS")
    cpu = os.cpu_count() or 1
    if not raw:
        return cpu
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer AGGSOLVE_THREADS={raw!r}")
        return cpu
    return max(1, value)


LOG_LEVEL = os.getenv("AGGSOLVE_LOG_LEVEL", "INFO").upper()
LOG_JSON = _env_bool("AGGSOLVE_LOG_JSON")
DEFAULT_OUT_DIR = os.getenv("AGGSOLVE_OUT_DIR", "results")
