"""Pluggable per-candidate relevance scorers.

A labeler maps (query, candidate) pairs to finite real scores and must be
pure: the same (query_id, context_id) pair always yields the same score
within a run. The caching wrapper exploits that purity to skip repeated
backend work across optimization iterations.
"""

from __future__ import annotations

import hashlib
import math
import re
import string
import threading
import time
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
import requests

from .errors import (
    ConfigError,
    ContractError,
    ProtocolError,
    TransportError,
    ValidationError,
)
from .store import CorpusMeta, QueryMeta

_ARTICLES = {"a", "an", "the"}
_PUNCT_TABLE = str.maketrans({ch: " " for ch in string.punctuation})
_WS = re.compile(r"\s+")


def normalize_answer(text: str) -> str:
    """Lowercase, drop punctuation and articles, collapse whitespace."""
    text = text.lower().translate(_PUNCT_TABLE)
    tokens = [t for t in _WS.split(text) if t and t not in _ARTICLES]
    return " ".join(tokens)


def contains_answer(text: str, answers: Sequence[str]) -> bool:
    """Whether any normalized answer occurs in the normalized text.

    Containment is on word boundaries: the answer's token sequence must
    appear contiguously in the text's token sequence.
    """
    haystack = f" {normalize_answer(text)} "
    for ans in answers:
        needle = normalize_answer(ans)
        if needle and f" {needle} " in haystack:
            return True
    return False


@dataclass
class RelevanceScores:
    """Labeler scores aligned with one candidate list."""

    query_id: str
    scores: list[tuple[str, float]]

    @property
    def context_ids(self) -> list[str]:
        return [cid for cid, _ in self.scores]

    @property
    def values(self) -> np.ndarray:
        return np.array([s for _, s in self.scores], dtype=np.float64)


@dataclass
class LabelerStats:
    """Backend-call accounting; backend_calls + cache_hits = total requests."""

    backend_calls: int = 0
    cache_hits: int = 0


class Labeler(Protocol):
    def score_candidates(
        self, query: QueryMeta, candidates: Sequence[CorpusMeta]
    ) -> RelevanceScores: ...


def _check_candidates(query: QueryMeta, candidates: Sequence[CorpusMeta]) -> None:
    if not candidates:
        raise ContractError(f"query {query.id!r}: candidate list must be nonempty")


def judge_relevant(query: QueryMeta, candidate: CorpusMeta) -> bool:
    """Ground-truth relevance: gold-id membership or answer containment.

    False when the query carries no ground truth at all.
    """
    if query.gold_ids and candidate.id in query.gold_ids:
        return True
    return bool(query.answers) and contains_answer(candidate.text, query.answers)


def oracle_score(query: QueryMeta, candidate: CorpusMeta) -> float:
    """+1.0 for a gold or answer-bearing candidate, -1.0 otherwise.

    The fixed margin keeps the downstream tempered softmax analytically
    predictable. Requires the query to carry answers or gold ids.
    """
    if not query.answers and not query.gold_ids:
        raise ConfigError(f"query {query.id!r} has neither answers nor gold_ids")
    return 1.0 if judge_relevant(query, candidate) else -1.0


class OracleLabeler:
    """Gold-answer labeler used for verification and synthetic runs."""

    def score_candidates(
        self, query: QueryMeta, candidates: Sequence[CorpusMeta]
    ) -> RelevanceScores:
        _check_candidates(query, candidates)
        return RelevanceScores(
            query_id=query.id,
            scores=[(c.id, oracle_score(query, c)) for c in candidates],
        )


class SyntheticLabeler:
    """Deterministic pseudo-random scores keyed by (query_id, context_id)."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def _score(self, query_id: str, context_id: str) -> float:
        digest = hashlib.sha256(
            f"{self.seed}:{query_id}:{context_id}".encode("utf-8")
        ).digest()
        # 8 bytes -> uniform in [-1, 1)
        u = int.from_bytes(digest[:8], "big") / 2**64
        return 2.0 * u - 1.0

    def score_candidates(
        self, query: QueryMeta, candidates: Sequence[CorpusMeta]
    ) -> RelevanceScores:
        _check_candidates(query, candidates)
        return RelevanceScores(
            query_id=query.id,
            scores=[(c.id, self._score(query.id, c.id)) for c in candidates],
        )


class CachingLabeler:
    """Run-scoped cache keyed by (query_id, context_id).

    Per-query processing is single-owner, so a key is never raced by two
    writers; the lock only serializes inserts from different queries.
    Stats are tracked per query for reporting.
    """

    def __init__(self, backend: Labeler):
        self.backend = backend
        self._cache: dict[tuple[str, str], float] = {}
        self._lock = threading.Lock()
        self._stats: dict[str, LabelerStats] = {}

    def stats_for(self, query_id: str) -> LabelerStats:
        with self._lock:
            return self._stats.setdefault(query_id, LabelerStats())

    def score_candidates(
        self, query: QueryMeta, candidates: Sequence[CorpusMeta]
    ) -> RelevanceScores:
        _check_candidates(query, candidates)
        stats = self.stats_for(query.id)
        missing = [c for c in candidates if (query.id, c.id) not in self._cache]
        if missing:
            fresh = self.backend.score_candidates(query, missing)
            if len(fresh.scores) != len(missing):
                raise ProtocolError(
                    f"backend returned {len(fresh.scores)} scores for "
                    f"{len(missing)} candidates"
                )
            with self._lock:
                for (cid, s), cand in zip(fresh.scores, missing):
                    if cid != cand.id:
                        raise ProtocolError(
                            f"backend score order mismatch: {cid!r} != {cand.id!r}"
                        )
                    if not math.isfinite(s):
                        raise ValidationError(
                            f"backend returned non-finite score for {cid!r}"
                        )
                    self._cache[(query.id, cid)] = s
        with self._lock:
            stats.backend_calls += len(missing)
            stats.cache_hits += len(candidates) - len(missing)
        return RelevanceScores(
            query_id=query.id,
            scores=[(c.id, self._cache[(query.id, c.id)]) for c in candidates],
        )


def render_remote_text(candidate: CorpusMeta) -> str:
    """Candidate text as sent over the wire: title prepended when present."""
    if candidate.title:
        return f"{candidate.title} {candidate.text}"
    return candidate.text


class RemoteLabeler:
    """HTTP client for an external scoring service.

    POSTs ``{base_url}/score`` with ``{"query", "candidates": [{"id","text"}]}``
    and expects ``{"scores": [...]}`` aligned to request order. Transport
    failures are retried up to ``max_retries`` times before surfacing.
    """

    def __init__(
        self,
        base_url: str,
        *,
        timeout: float = 10.0,
        max_retries: int = 2,
        max_batch: int = 32,
        session: requests.Session | None = None,
        backoff_s: float = 0.1,
    ):
        if max_batch < 1:
            raise ConfigError(f"max_batch must be >= 1, got {max_batch}")
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.max_retries = max_retries
        self.max_batch = max_batch
        self.backoff_s = backoff_s
        self._session = session or requests.Session()

    def _post_batch(self, query: QueryMeta, batch: Sequence[CorpusMeta]) -> list[float]:
        url = f"{self.base_url}/score"
        payload = {
            "query": query.text,
            "candidates": [{"id": c.id, "text": render_remote_text(c)} for c in batch],
        }
        last_exc: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = self._session.post(url, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                if attempt < self.max_retries:
                    time.sleep(self.backoff_s * (attempt + 1))
                continue
            if 400 <= resp.status_code < 500:
                raise ProtocolError(
                    f"{url} rejected request for query {query.id!r}: "
                    f"HTTP {resp.status_code}"
                )
            if resp.status_code != 200:
                last_exc = ProtocolError(f"HTTP {resp.status_code}")
                if attempt < self.max_retries:
                    time.sleep(self.backoff_s * (attempt + 1))
                continue
            try:
                body = resp.json()
                scores = body["scores"]
            except (ValueError, KeyError, TypeError):
                raise ProtocolError(
                    f"{url} returned a malformed response for query {query.id!r}"
                ) from None
            if not isinstance(scores, list) or len(scores) != len(batch):
                raise ProtocolError(
                    f"{url} returned {len(scores) if isinstance(scores, list) else 'non-list'} "
                    f"scores for {len(batch)} candidates (query {query.id!r})"
                )
            out = []
            for cand, s in zip(batch, scores):
                if not isinstance(s, (int, float)) or not math.isfinite(float(s)):
                    raise ValidationError(
                        f"{url} returned non-finite score for candidate {cand.id!r}"
                    )
                out.append(float(s))
            return out
        raise TransportError(
            f"{url} unreachable after {self.max_retries + 1} attempts "
            f"(query {query.id!r}): {last_exc}"
        )

    def score_candidates(
        self, query: QueryMeta, candidates: Sequence[CorpusMeta]
    ) -> RelevanceScores:
        _check_candidates(query, candidates)
        scores: list[tuple[str, float]] = []
        for start in range(0, len(candidates), self.max_batch):
            batch = list(candidates[start : start + self.max_batch])
            values = self._post_batch(query, batch)
            scores.extend((c.id, v) for c, v in zip(batch, values))
        return RelevanceScores(query_id=query.id, scores=scores)
