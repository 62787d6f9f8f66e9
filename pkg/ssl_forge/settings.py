"""
Environment-driven settings for ssl_forge.
"""
import logging
import os
from typing import Optional

from dotenv import load_dotenv


ENV_FILE = "ssl_forge.env"
DEFAULT_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def load_environment(env_file: Optional[str] = None) -> None:
    """Load environment variables from the env file if it exists."""
    load_dotenv(env_file or ENV_FILE)


def thread_cap() -> int:
    """Parallelism cap from SSL_FORGE_THREADS (default 1)."""
    raw = os.getenv("SSL_FORGE_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        logging.getLogger(__name__).warning(f"Ignoring non-integer SSL_FORGE_THREADS={raw!r}")
        return 1
    return max(1, value)


def log_level(quiet: bool = False) -> int:
    """Logging level from LOG_LEVEL, raised to WARNING when quiet."""
    if quiet:
        return logging.WARNING
    name = os.getenv("LOG_LEVEL", "INFO").upper()
    return getattr(logging, name, logging.INFO)


def configure_logging(quiet: bool = False) -> None:
    """Configure root logging once for command-line use."""
    logging.basicConfig(
        level=log_level(quiet),
        format=DEFAULT_LOG_FORMAT,
        handlers=[logging.StreamHandler()],
        force=True,
    )
