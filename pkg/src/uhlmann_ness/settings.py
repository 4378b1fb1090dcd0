"""Process-level settings for the command-line front end."""

import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

from dotenv import load_dotenv

from uhlmann_ness.errors import ConfigError

load_dotenv()

THREADS_VARIABLE = "UHLMANN_NESS_THREADS"


def _level_names() -> dict[str, int]:
    if sys.version_info >= (3, 11):
        return logging.getLevelNamesMapping()
    return dict(logging._nameToLevel)  # pragma: no cover - Python 3.10


def _default_threads() -> Optional[str]:
    return os.getenv(THREADS_VARIABLE)


@dataclass
class Settings:
    # logging
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # sweep workers; raw string until validated
    threads_env: Optional[str] = field(default_factory=_default_threads)

    @property
    def threads(self) -> int:
        if self.threads_env is None or self.threads_env == "":
            return 1
        return int(self.threads_env)

    @classmethod
    def validate(cls, log_level: Optional[str] = None) -> "Settings":
        """Read the environment and check every setting."""
        settings = cls() if log_level is None else cls(log_level=log_level.upper())
        if settings.log_level not in _level_names():
            raise ConfigError(f"unknown log level {settings.log_level!r}")
        try:
            threads = settings.threads
        except ValueError:
            raise ConfigError(
                f"{THREADS_VARIABLE} must be an integer, got {settings.threads_env!r}"
            ) from None
        if threads < 1:
            raise ConfigError(f"{THREADS_VARIABLE} must be at least 1, got {threads}")
        return settings

    def configure_logging(self) -> None:
        logging.basicConfig(level=self.log_level, format=self.log_format, force=True)
