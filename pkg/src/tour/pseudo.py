"""Turn raw relevance scores into soft targets and a pseudo-positive set.

The soft target is a tempered softmax over the candidate scores. The
pseudo-positive set is the smallest group of candidates whose soft mass
reaches a threshold: candidates are taken in order of probability
descending (ties broken by retrieval rank ascending) and the prefix stops
as soon as the cumulative mass is at least the threshold. Truncation is
deterministic, never sampled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, ContractError
from .labelers import RelevanceScores

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class PseudoLabels:
    """Soft distribution plus hard pseudo-positive indices for one candidate set."""

    soft: np.ndarray
    hard: frozenset[int]
    tau: float
    p: float


def _as_score_array(scores) -> np.ndarray:
    if isinstance(scores, RelevanceScores):
        arr = scores.values
    else:
        arr = np.asarray(scores, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ContractError(f"scores must be a nonempty vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ContractError("scores must be finite")
    return arr


def soft_distribution(scores, tau: float) -> np.ndarray:
    """Tempered softmax of the scores, stabilized by max subtraction."""
    if tau <= 0:
        raise ConfigError(f"temperature must be positive, got {tau}")
    s = _as_score_array(scores) / float(tau)
    s -= s.max()
    e = np.exp(s)
    return e / e.sum()


def select_hard_set(
    soft: np.ndarray, ranks: Sequence[int] | None, p: float
) -> frozenset[int]:
    """Smallest probability-descending prefix with cumulative mass >= p.

    ``ranks`` gives each candidate's retrieval rank for tie-breaking;
    omit it to tie-break by position. The comparison is exact (no epsilon)
    after stable summation in descending order, and the result is nonempty
    for any valid input.
    """
    soft = np.asarray(soft, dtype=np.float64)
    if not 0.0 < p <= 1.0:
        raise ConfigError(f"mass threshold must be in (0, 1], got {p}")
    if soft.ndim != 1 or soft.size < 1:
        raise ContractError(f"soft must be a nonempty vector, got shape {soft.shape}")
    if soft.min() < 0.0 or soft.max() > 1.0 or abs(soft.sum() - 1.0) > _SUM_TOL:
        raise ContractError("soft must be a probability vector")
    if ranks is None:
        ranks = np.arange(1, soft.size + 1)
    ranks = np.asarray(ranks)
    if ranks.shape != soft.shape:
        raise ContractError("ranks must align with soft")
    order = np.lexsort((ranks, -soft))
    total = 0.0
    chosen: list[int] = []
    for idx in order:
        chosen.append(int(idx))
        total += soft[idx]
        if total >= p:
            break
    return frozenset(chosen)


def make_pseudo_labels(
    scores, tau: float, p: float, ranks: Sequence[int] | None = None
) -> PseudoLabels:
    """Build soft and hard labels from one candidate set's scores."""
    soft = soft_distribution(scores, tau)
    hard = select_hard_set(soft, ranks, p)
    return PseudoLabels(soft=soft, hard=hard, tau=float(tau), p=float(p))
