"""Query-vector optimization loop with hard and soft objectives.

The hard objective is the negative log marginal likelihood of the
pseudo-positive candidates under the retrieval softmax; the soft objective
is the KL divergence from the labeler's tempered score distribution to the
retrieval softmax. Both gradients are closed-form:

    grad_hard = sum_i P_k(i) c_i - sum_{j in hard} R(j) c_j
    grad_soft = sum_i P_k(i) c_i - sum_i target_i c_i

where P_k is the softmax of the query-candidate inner products over the
full candidate set and R is the same softmax restricted to the hard set.
Updates use momentum, coupled weight decay, and a linearly decaying step
size; each test query is optimized independently from a zeroed momentum
buffer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigError, ContractError, NumericError
from .labelers import Labeler, RelevanceScores
from .pseudo import PseudoLabels, make_pseudo_labels
from .store import CorpusMeta, EmbeddingMatrix, QueryMeta, RetrievalResult, top_k_search

STOP_TOP1_PSEUDO_POSITIVE = "top1-pseudo-positive"
STOP_TOP1_HIGHEST_SCORE = "top1-highest-score"
STOP_MAX_ITERS = "max-iters"

_TARGET_SUM_TOL = 1e-6


@dataclass
class QueryState:
    """Evolving query vector with its momentum buffer."""

    query_id: str
    q: np.ndarray
    velocity: np.ndarray
    iteration: int = 0


@dataclass(frozen=True)
class OptimizerConfig:
    """Gradient-descent settings for per-query optimization.

    Defaults follow the open-domain QA preset; ``passage_densephrases`` and
    ``passage_dpr`` give the single-iteration passage presets.
    """

    eta: float = 1.2
    max_iters: int = 3
    momentum: float = 0.99
    weight_decay: float = 0.01
    k: int = 10
    p: float = 0.5
    tau: float = 0.5
    variant: str = "hard"

    def __post_init__(self):
        if self.eta <= 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.p <= 1.0:
            raise ConfigError(f"p must be in (0, 1], got {self.p}")
        if self.tau <= 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.variant not in ("hard", "soft"):
            raise ConfigError(f"variant must be 'hard' or 'soft', got {self.variant!r}")

    @classmethod
    def odqa(cls, **overrides) -> "OptimizerConfig":
        return cls(**{"eta": 1.2, "max_iters": 3, "k": 10, **overrides})

    @classmethod
    def passage_densephrases(cls, **overrides) -> "OptimizerConfig":
        return cls(**{"eta": 1.2, "max_iters": 1, "k": 100, **overrides})

    @classmethod
    def passage_dpr(cls, **overrides) -> "OptimizerConfig":
        return cls(**{"eta": 0.2, "max_iters": 1, "k": 100, **overrides})


@dataclass
class TourOutcome:
    """Result of optimizing one query."""

    query_id: str
    final_q: np.ndarray
    iterations_used: int
    stop_reason: str
    final_candidates: RetrievalResult
    final_scores: RelevanceScores | None
    trajectory: list[np.ndarray] = field(default_factory=list)


def retrieval_softmax(q: np.ndarray, cand_vecs: np.ndarray) -> np.ndarray:
    """Softmax of the query-candidate inner products (no temperature)."""
    sims = cand_vecs @ np.asarray(q, dtype=np.float64)
    sims = sims - sims.max()
    e = np.exp(sims)
    return e / e.sum()


def _check_hard(hard, k: int) -> np.ndarray:
    idx = np.array(sorted(int(i) for i in hard), dtype=np.intp)
    if idx.size == 0:
        raise ContractError("hard set must be nonempty")
    if idx[0] < 0 or idx[-1] >= k:
        raise ContractError(f"hard indices must lie in [0, {k}), got {idx.tolist()}")
    if np.unique(idx).size != idx.size:
        raise ContractError("hard indices must be distinct")
    return idx


def _check_target(target, k: int) -> np.ndarray:
    t = np.asarray(target, dtype=np.float64)
    if t.shape != (k,):
        raise ContractError(f"target must have shape ({k},), got {t.shape}")
    if t.min() < 0.0:
        raise ContractError("target entries must be nonnegative")
    if abs(t.sum() - 1.0) > _TARGET_SUM_TOL:
        raise ContractError(f"target must sum to 1, got {t.sum()!r}")
    return t


def loss_hard(q: np.ndarray, cand_vecs: np.ndarray, hard: Iterable[int]) -> float:
    """Negative log of the hard set's mass under the retrieval softmax."""
    cand_vecs = np.asarray(cand_vecs, dtype=np.float64)
    idx = _check_hard(hard, cand_vecs.shape[0])
    sims = cand_vecs @ np.asarray(q, dtype=np.float64)
    m = sims.max()
    log_z = m + np.log(np.exp(sims - m).sum())
    sub = sims[idx]
    ms = sub.max()
    log_z_hard = ms + np.log(np.exp(sub - ms).sum())
    return float(log_z - log_z_hard)


def grad_hard(q: np.ndarray, cand_vecs: np.ndarray, hard: Iterable[int]) -> np.ndarray:
    """Closed-form gradient of loss_hard with respect to the query vector."""
    cand_vecs = np.asarray(cand_vecs, dtype=np.float64)
    idx = _check_hard(hard, cand_vecs.shape[0])
    p_all = retrieval_softmax(q, cand_vecs)
    restricted = retrieval_softmax(q, cand_vecs[idx])
    return p_all @ cand_vecs - restricted @ cand_vecs[idx]


def loss_soft(q: np.ndarray, cand_vecs: np.ndarray, target) -> float:
    """KL divergence from the target distribution to the retrieval softmax."""
    cand_vecs = np.asarray(cand_vecs, dtype=np.float64)
    t = _check_target(target, cand_vecs.shape[0])
    sims = cand_vecs @ np.asarray(q, dtype=np.float64)
    m = sims.max()
    log_pk = (sims - m) - np.log(np.exp(sims - m).sum())
    mask = t > 0.0
    return float(np.sum(t[mask] * (np.log(t[mask]) - log_pk[mask])))


def grad_soft(q: np.ndarray, cand_vecs: np.ndarray, target) -> np.ndarray:
    """Closed-form gradient of loss_soft with respect to the query vector."""
    cand_vecs = np.asarray(cand_vecs, dtype=np.float64)
    t = _check_target(target, cand_vecs.shape[0])
    p_all = retrieval_softmax(q, cand_vecs)
    return (p_all - t) @ cand_vecs


def schedule_eta(eta: float, max_iters: int, iteration: int) -> float:
    """Linearly decaying step size: eta * (T - t) / T for 0-indexed t."""
    return eta * (max_iters - iteration) / max_iters


def apply_update(state: QueryState, grad: np.ndarray, config: OptimizerConfig) -> QueryState:
    """One momentum step with coupled weight decay and the scheduled step size."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != state.q.shape:
        raise ContractError(f"gradient shape {grad.shape} != query shape {state.q.shape}")
    if not np.isfinite(grad).all():
        raise NumericError(f"query {state.query_id!r}: non-finite gradient")
    eta_t = schedule_eta(config.eta, config.max_iters, state.iteration)
    with np.errstate(over="ignore", invalid="ignore"):
        effective = grad + config.weight_decay * state.q
        velocity = config.momentum * state.velocity + effective
        q = state.q - eta_t * velocity
    if not np.isfinite(q).all():
        raise NumericError(f"query {state.query_id!r}: update overflowed")
    return QueryState(
        query_id=state.query_id, q=q, velocity=velocity, iteration=state.iteration + 1
    )


def should_stop(
    variant: str, top1_index: int, labels: PseudoLabels, scores: RelevanceScores
) -> bool:
    """Early-stop test: the best-ranked candidate already looks right.

    Hard variant: rank-1 is pseudo-positive. Soft variant: rank-1 attains
    the maximum labeler score (ties count as satisfied).
    """
    if variant == "hard":
        return top1_index in labels.hard
    if variant == "soft":
        values = scores.values
        return bool(values[top1_index] >= values.max())
    raise ConfigError(f"unknown variant {variant!r}")


def run_tour(
    query: QueryMeta,
    q0: np.ndarray,
    index: EmbeddingMatrix,
    labeler: Labeler,
    config: OptimizerConfig,
    corpus: Mapping[str, CorpusMeta],
) -> TourOutcome:
    """Optimize one query: retrieve, label, update, repeat until stop.

    Each round retrieves top-k with the current vector, scores the
    candidates (a caching labeler makes repeats free), and checks the stop
    condition before any update, so a query that stops at round t keeps the
    vector and candidate set it entered the round with. Only an exhausted
    iteration budget triggers one final retrieval and scoring pass with the
    updated vector.
    """
    q = np.asarray(q0, dtype=np.float64).copy()
    if q.ndim != 1 or q.shape[0] != index.dim:
        raise ContractError(f"q0 has shape {q.shape}, index dim is {index.dim}")
    state = QueryState(
        query_id=query.id, q=q, velocity=np.zeros_like(q), iteration=0
    )
    trajectory = [state.q]
    for t in range(config.max_iters):
        result = top_k_search(index, state.q, config.k, query_id=query.id)
        if not result.entries:
            return TourOutcome(
                query_id=query.id,
                final_q=state.q,
                iterations_used=t,
                stop_reason=STOP_MAX_ITERS,
                final_candidates=result,
                final_scores=None,
                trajectory=trajectory,
            )
        candidates = [corpus[cid] for cid in result.context_ids()]
        scores = labeler.score_candidates(query, candidates)
        labels = make_pseudo_labels(scores, config.tau, config.p)
        if should_stop(config.variant, 0, labels, scores):
            reason = (
                STOP_TOP1_PSEUDO_POSITIVE
                if config.variant == "hard"
                else STOP_TOP1_HIGHEST_SCORE
            )
            return TourOutcome(
                query_id=query.id,
                final_q=state.q,
                iterations_used=t,
                stop_reason=reason,
                final_candidates=result,
                final_scores=scores,
                trajectory=trajectory,
            )
        cand_vecs = index.rows(result.context_ids())
        if config.variant == "hard":
            grad = grad_hard(state.q, cand_vecs, labels.hard)
        else:
            grad = grad_soft(state.q, cand_vecs, labels.soft)
        state = apply_update(state, grad, config)
        trajectory.append(state.q)
    final = top_k_search(index, state.q, config.k, query_id=query.id)
    final_scores = None
    if final.entries:
        final_scores = labeler.score_candidates(
            query, [corpus[cid] for cid in final.context_ids()]
        )
    return TourOutcome(
        query_id=query.id,
        final_q=state.q,
        iterations_used=config.max_iters,
        stop_reason=STOP_MAX_ITERS,
        final_candidates=final,
        final_scores=final_scores,
        trajectory=trajectory,
    )
