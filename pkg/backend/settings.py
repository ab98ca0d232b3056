"""
Process-level settings read from the environment.

A ``.env`` file in the working directory is loaded first (python-dotenv);
variables already set in the environment take precedence.

    EIT_LOG_LEVEL     logging level name (default INFO)
    EIT_WORKERS       sweep worker processes (default 1, serial)
    EIT_CORS_ORIGINS  comma-separated origins for the HTTP API
    EIT_HOST          bind address for the HTTP API
    EIT_PORT          port for the HTTP API
"""

import logging
import os
from dataclasses import dataclass
from functools import lru_cache

from dotenv import load_dotenv

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Settings:
    log_level: str = "INFO"
    workers: int = 1
    cors_origins: tuple[str, ...] = ("http://localhost:3000", "http://localhost:5173")
    host: str = "0.0.0.0"
    port: int = 8000


def _int_env(name: str, default: int, minimum: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r: not an integer", name, raw)
        return default
    if value < minimum:
        logger.warning("Ignoring %s=%d: must be >= %d", name, value, minimum)
        return default
    return value


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Load settings once per process."""
    load_dotenv()
    defaults = Settings()
    origins = os.getenv("EIT_CORS_ORIGINS")
    return Settings(
        log_level=os.getenv("EIT_LOG_LEVEL", defaults.log_level).upper(),
        workers=_int_env("EIT_WORKERS", defaults.workers, minimum=1),
        cors_origins=(
            tuple(o.strip() for o in origins.split(",") if o.strip())
            if origins else defaults.cors_origins
        ),
        host=os.getenv("EIT_HOST", defaults.host),
        port=_int_env("EIT_PORT", defaults.port, minimum=1),
    )


def configure_logging(level: str | None = None) -> None:
    """Send log records to stderr at the configured level."""
    logging.basicConfig(
        level=getattr(logging, (level or get_settings().log_level), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
