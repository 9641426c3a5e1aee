"""HTTP endpoints implementing the scoring wire protocol.

``POST /score`` takes ``{"query": str, "candidates": [{"id", "text"}]}``
and returns ``{"scores": [float]}`` aligned with the candidate order.
Marker substrings such as ``[S]`` and ``[E]`` inside candidate text are
passed to the model verbatim. ``GET /health`` reports liveness.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .config import ServiceConfig
from .model import CrossEncoderScorer


class Candidate(BaseModel):
    id: str
    text: str


class ScoreRequest(BaseModel):
    query: str
    candidates: list[Candidate]


class ScoreResponse(BaseModel):
    scores: list[float]


def create_app(scorer: CrossEncoderScorer, config: ServiceConfig) -> FastAPI:
    """Wire a loaded scorer into an application serving the protocol."""
    app = FastAPI(title="scoring-service", version="0.1.0")

    @app.get("/health")
    def health() -> dict[str, str]:
        return {"status": "ok"}

    @app.post("/score")
    def score(request: ScoreRequest) -> ScoreResponse:
        if not request.query.strip():
            raise HTTPException(status_code=400, detail="query must be nonempty")
        if not request.candidates:
            raise HTTPException(status_code=400, detail="candidates must be nonempty")
        if len(request.candidates) > config.max_batch:
            raise HTTPException(
                status_code=413,
                detail=(
                    f"batch of {len(request.candidates)} candidates exceeds "
                    f"the limit of {config.max_batch}"
                ),
            )
        scores = scorer.score(request.query, [c.text for c in request.candidates])
        return ScoreResponse(scores=scores)

    return app
