"""Classical Rocchio pseudo-relevance feedback over embedding vectors.

Treats the top k_prime retrieved vectors as relevant and the remainder of
the retrieved list as non-relevant, then moves the query toward the
relevant centroid and away from the non-relevant one. No labeler is
consulted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError
from .optim import STOP_MAX_ITERS, TourOutcome
from .store import EmbeddingMatrix, QueryMeta, top_k_search


@dataclass(frozen=True)
class RocchioConfig:
    """Rocchio coefficients plus the retrieval depth they act on.

    Defaults are the synthetic-benchmark preset; they are tuning knobs,
    not canonical values.
    """

    alpha: float = 1.0
    beta: float = 0.5
    gamma: float = 0.5
    k_prime: int = 3
    iterations: int = 1
    k: int = 10

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not 1 <= self.k_prime < self.k:
            raise ConfigError(
                f"k_prime must be in [1, k={self.k}), got {self.k_prime}"
            )
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")


def rocchio_update(
    q: np.ndarray, cand_vecs: np.ndarray, config: RocchioConfig
) -> np.ndarray:
    """alpha * q + beta * mean(top k_prime rows) - gamma * mean(the rest).

    cand_vecs rows must be in retrieval-rank order. A side left empty by a
    short candidate list contributes nothing.
    """
    q = np.asarray(q, dtype=np.float64)
    cand_vecs = np.asarray(cand_vecs, dtype=np.float64)
    if cand_vecs.ndim != 2 or cand_vecs.shape[1] != q.shape[0]:
        raise ContractError(
            f"cand_vecs must be (k, {q.shape[0]}), got {cand_vecs.shape}"
        )
    if cand_vecs.shape[0] == 0:
        raise ContractError("cand_vecs must have at least one row")
    split = min(config.k_prime, cand_vecs.shape[0])
    out = config.alpha * q + config.beta * cand_vecs[:split].mean(axis=0)
    if cand_vecs.shape[0] > split:
        out = out - config.gamma * cand_vecs[split:].mean(axis=0)
    return out


def run_prf(
    query: QueryMeta,
    q0: np.ndarray,
    index: EmbeddingMatrix,
    config: RocchioConfig,
) -> TourOutcome:
    """Run the configured number of feedback rounds and re-retrieve."""
    q = np.asarray(q0, dtype=np.float64).copy()
    if q.ndim != 1 or q.shape[0] != index.dim:
        raise ContractError(f"q0 has shape {q.shape}, index dim is {index.dim}")
    trajectory = [q]
    for _ in range(config.iterations):
        result = top_k_search(index, q, config.k, query_id=query.id)
        if not result.entries:
            break
        q = rocchio_update(q, index.rows(result.context_ids()), config)
        trajectory.append(q)
    final = top_k_search(index, q, config.k, query_id=query.id)
    return TourOutcome(
        query_id=query.id,
        final_q=q,
        iterations_used=len(trajectory) - 1,
        stop_reason=STOP_MAX_ITERS,
        final_candidates=final,
        final_scores=None,
        trajectory=trajectory,
    )
