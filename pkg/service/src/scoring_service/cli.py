"""Command-line entry point: load the model, then serve.

The model is loaded before the listening socket is bound, so a broken or
unreachable model refuses to start the service instead of serving errors.
"""

from __future__ import annotations

import argparse
import sys

import uvicorn

from .app import create_app
from .config import (
    ENV_HOST,
    ENV_MAX_BATCH,
    ENV_MAX_LENGTH,
    ENV_MODEL,
    ENV_PORT,
    ConfigError,
    ServiceConfig,
    config_from_env,
)
from .model import CrossEncoderScorer, ModelLoadError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scoring-service",
        description="Serve cross-encoder relevance scores over HTTP.",
    )
    parser.add_argument("--model", help=f"model name (default: ${ENV_MODEL} or built-in)")
    parser.add_argument(
        "--max-batch", type=int, help=f"max candidates per request (default: ${ENV_MAX_BATCH})"
    )
    parser.add_argument(
        "--max-length", type=int, help=f"max input tokens per pair (default: ${ENV_MAX_LENGTH})"
    )
    parser.add_argument("--host", help=f"bind address (default: ${ENV_HOST})")
    parser.add_argument("--port", type=int, help=f"bind port, 0 for ephemeral (default: ${ENV_PORT})")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        base = config_from_env()
        config = ServiceConfig(
            model_name=args.model if args.model is not None else base.model_name,
            max_batch=args.max_batch if args.max_batch is not None else base.max_batch,
            max_length=args.max_length if args.max_length is not None else base.max_length,
            host=args.host if args.host is not None else base.host,
            port=args.port if args.port is not None else base.port,
        )
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        scorer = CrossEncoderScorer(
            config.model_name, max_length=config.max_length, batch_size=config.max_batch
        )
    except ModelLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    app = create_app(scorer, config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
