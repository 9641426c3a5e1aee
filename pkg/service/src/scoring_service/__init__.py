"""HTTP service scoring query-context pairs with a pretrained cross-encoder."""

from .app import Candidate, ScoreRequest, ScoreResponse, create_app
from .config import ConfigError, ServiceConfig, config_from_env
from .model import CrossEncoderScorer, ModelLoadError

__version__ = "0.1.0"

__all__ = [
    "Candidate",
    "ConfigError",
    "CrossEncoderScorer",
    "ModelLoadError",
    "ScoreRequest",
    "ScoreResponse",
    "ServiceConfig",
    "config_from_env",
    "create_app",
]
