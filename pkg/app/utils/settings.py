"""
Settings
========

Centralized environment configuration. Values come from the process
environment, optionally seeded from a `.env` file.
"""

import logging
import os
from dataclasses import dataclass

from dotenv import load_dotenv

from app.core.errors import DomainError
from app.core.montecarlo import DEFAULT_CHUNK

load_dotenv()


@dataclass(frozen=True)
class Settings:
    threads: int
    log_level: str
    chunk_size: int


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise DomainError(f"{name} must be an integer (got {raw!r})")
    if value < 1:
        raise DomainError(f"{name} must be positive (got {value})")
    return value


def get_settings() -> Settings:
    """
    Read the current settings.

    Returns:
        Settings with thread count, log level name and Monte Carlo chunk size
    """
    level = os.getenv("WISHART_RISK_LOG_LEVEL", "WARNING").strip().upper()
    if not isinstance(logging.getLevelName(level), int):
        raise DomainError(f"WISHART_RISK_LOG_LEVEL is not a logging level (got {level!r})")
    return Settings(
        threads=_int_env("WISHART_RISK_THREADS", os.cpu_count() or 1),
        log_level=level,
        chunk_size=_int_env("WISHART_RISK_CHUNK", DEFAULT_CHUNK),
    )


def configure_logging(verbosity: int = 0) -> None:
    """Route log records to stderr; each -v lowers the threshold one step below the configured level."""
    level = logging.getLevelName(get_settings().log_level)
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = min(level, logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
