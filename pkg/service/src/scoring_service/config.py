"""Service settings sourced from environment variables.

Every knob has an ``SCORING_*`` environment variable and a matching CLI
flag; flags win over the environment, which wins over the defaults.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Mapping


class ConfigError(ValueError):
    """A configuration value is missing or outside its permitted range."""


DEFAULT_MODEL = "cross-encoder/ms-marco-MiniLM-L6-v2"
DEFAULT_MAX_BATCH = 32
DEFAULT_MAX_LENGTH = 512
DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8200

ENV_MODEL = "SCORING_MODEL"
ENV_MAX_BATCH = "SCORING_MAX_BATCH"
ENV_MAX_LENGTH = "SCORING_MAX_LENGTH"
ENV_HOST = "SCORING_HOST"
ENV_PORT = "SCORING_PORT"


@dataclass(frozen=True)
class ServiceConfig:
    """Validated settings for one service instance."""

    model_name: str = DEFAULT_MODEL
    max_batch: int = DEFAULT_MAX_BATCH
    max_length: int = DEFAULT_MAX_LENGTH
    host: str = DEFAULT_HOST
    port: int = DEFAULT_PORT

    def __post_init__(self) -> None:
        if not self.model_name:
            raise ConfigError("model name must be nonempty")
        if self.max_batch < 1:
            raise ConfigError(f"max batch must be >= 1, got {self.max_batch}")
        if self.max_length < 8:
            raise ConfigError(f"max length must be >= 8, got {self.max_length}")
        if not self.host:
            raise ConfigError("host must be nonempty")
        if not 0 <= self.port <= 65535:
            raise ConfigError(f"port must be in [0, 65535], got {self.port}")


def _env_str(environ: Mapping[str, str], name: str, default: str) -> str:
    value = environ.get(name, "")
    return value if value else default


def _env_int(environ: Mapping[str, str], name: str, default: int) -> int:
    raw = environ.get(name, "")
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from None


def config_from_env(environ: Mapping[str, str] | None = None) -> ServiceConfig:
    """Build a config from ``SCORING_*`` variables; blanks fall back to defaults."""
    if environ is None:
        environ = os.environ
    return ServiceConfig(
        model_name=_env_str(environ, ENV_MODEL, DEFAULT_MODEL),
        max_batch=_env_int(environ, ENV_MAX_BATCH, DEFAULT_MAX_BATCH),
        max_length=_env_int(environ, ENV_MAX_LENGTH, DEFAULT_MAX_LENGTH),
        host=_env_str(environ, ENV_HOST, DEFAULT_HOST),
        port=_env_int(environ, ENV_PORT, DEFAULT_PORT),
    )
