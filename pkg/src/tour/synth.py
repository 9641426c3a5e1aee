"""Synthetic retrieval benchmark with controlled initial gold ranks.

Contexts are unit-norm random vectors. Each query starts from its gold
context plus calibrated noise, q0 = normalize(gold + sigma * u), with
sigma chosen per query so the gold's initial retrieval rank lands inside a
target band. Ranks are measured on the float32 vectors exactly as a run
would see them after a round trip through the on-disk format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .store import CorpusMeta, QueryMeta, write_embeddings, write_jsonl

_MAX_DIRECTION_TRIES = 10
_BISECT_STEPS = 48


@dataclass(frozen=True)
class SyntheticDataset:
    """In-memory synthetic benchmark plus per-query diagnostics."""

    corpus_vectors: np.ndarray
    corpus_meta: list[CorpusMeta]
    query_vectors: np.ndarray
    query_meta: list[QueryMeta]
    gold_ranks: list[int]

    def in_band_fraction(self, lo: int, hi: int) -> float:
        hits = sum(1 for r in self.gold_ranks if lo <= r <= hi)
        return hits / len(self.gold_ranks)


def _context_id(i: int) -> str:
    return f"c{i:05d}"


def _gold_rank(
    corpus32: np.ndarray, ids: list[str], gold_row: int, q32: np.ndarray
) -> int:
    """1-based rank of the gold row under sim-desc, id-asc ordering."""
    sims = corpus32.astype(np.float64) @ q32.astype(np.float64)
    sg = sims[gold_row]
    ahead = int(np.count_nonzero(sims > sg))
    tied = np.flatnonzero(sims == sg)
    gold_id = ids[gold_row]
    ahead += sum(1 for j in tied if ids[j] < gold_id)
    return ahead + 1


def _query_vector(gold: np.ndarray, direction: np.ndarray, sigma: float) -> np.ndarray:
    q = gold + sigma * direction
    q = q / np.linalg.norm(q)
    return q.astype(np.float32)


def _calibrate_query(
    rng: np.random.Generator,
    corpus32: np.ndarray,
    ids: list[str],
    gold_row: int,
    rank_lo: int,
    rank_hi: int,
) -> tuple[np.ndarray, int]:
    """Search noise scale (resampling direction on failure) for a rank in band."""
    gold = corpus32[gold_row].astype(np.float64)
    best_q, best_rank = None, None
    for _ in range(_MAX_DIRECTION_TRIES):
        direction = rng.standard_normal(gold.shape[0])
        direction /= np.linalg.norm(direction)
        lo, hi = 0.0, 0.5
        for _ in range(60):
            q = _query_vector(gold, direction, hi)
            r = _gold_rank(corpus32, ids, gold_row, q)
            if r >= rank_lo:
                break
            lo, hi = hi, hi * 1.6
        if rank_lo <= r <= rank_hi:
            return q, r
        if best_rank is None or abs(r - rank_hi) < abs(best_rank - rank_hi):
            best_q, best_rank = q, r
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            q = _query_vector(gold, direction, mid)
            r = _gold_rank(corpus32, ids, gold_row, q)
            if rank_lo <= r <= rank_hi:
                return q, r
            if r < rank_lo:
                lo = mid
            else:
                hi = mid
            if abs(r - rank_hi) < abs(best_rank - rank_hi):
                best_q, best_rank = q, r
    # No scale hit the band for any direction; keep the closest miss.
    return best_q, best_rank


def generate_synthetic(
    n_contexts: int,
    n_queries: int,
    dim: int,
    gold_rank_range: tuple[int, int] = (2, 8),
    seed: int = 0,
) -> SyntheticDataset:
    if n_contexts < 2 or n_queries < 1 or dim < 2:
        raise ConfigError(
            f"need n_contexts >= 2, n_queries >= 1, dim >= 2; "
            f"got {n_contexts}, {n_queries}, {dim}"
        )
    rank_lo, rank_hi = gold_rank_range
    if not 1 <= rank_lo <= rank_hi <= n_contexts:
        raise ConfigError(f"bad gold rank range {gold_rank_range}")
    rng = np.random.default_rng(seed)

    vecs = rng.standard_normal((n_contexts, dim))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    corpus32 = vecs.astype(np.float32)
    ids = [_context_id(i) for i in range(n_contexts)]
    corpus_meta = [
        CorpusMeta(
            id=ids[i],
            title=f"Synthetic context {i}",
            text=f"This synthetic passage carries the marker token {ids[i]}.",
        )
        for i in range(n_contexts)
    ]

    if n_queries <= n_contexts:
        golds = rng.choice(n_contexts, size=n_queries, replace=False)
    else:
        golds = rng.integers(0, n_contexts, size=n_queries)

    query_vecs = np.empty((n_queries, dim), dtype=np.float32)
    query_meta = []
    gold_ranks = []
    for j, gold_row in enumerate(golds):
        q32, rank = _calibrate_query(rng, corpus32, ids, int(gold_row), rank_lo, rank_hi)
        query_vecs[j] = q32
        gold_ranks.append(rank)
        gold_id = ids[int(gold_row)]
        query_meta.append(
            QueryMeta(
                id=f"q{j:05d}",
                text=f"Which synthetic passage carries the marker token {gold_id}?",
                answers=(f"token {gold_id}",),
                gold_ids=(gold_id,),
            )
        )
    return SyntheticDataset(
        corpus_vectors=corpus32,
        corpus_meta=corpus_meta,
        query_vectors=query_vecs,
        query_meta=query_meta,
        gold_ranks=gold_ranks,
    )


def write_synthetic(dataset: SyntheticDataset, out_dir: str | Path) -> dict[str, str]:
    """Write the dataset in the on-disk formats plus a ready-to-run config.

    Returns the path map used in the emitted config.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus_embeddings": str(out / "corpus.emb"),
        "corpus_meta": str(out / "corpus.jsonl"),
        "query_embeddings": str(out / "queries.emb"),
        "query_meta": str(out / "queries.jsonl"),
    }
    write_embeddings(paths["corpus_embeddings"], dataset.corpus_vectors)
    write_jsonl(
        paths["corpus_meta"],
        ({"id": m.id, "title": m.title, "text": m.text} for m in dataset.corpus_meta),
    )
    write_embeddings(paths["query_embeddings"], dataset.query_vectors)
    write_jsonl(
        paths["query_meta"],
        (
            {
                "id": m.id,
                "text": m.text,
                "answers": list(m.answers),
                "gold_ids": list(m.gold_ids or ()),
            }
            for m in dataset.query_meta
        ),
    )
    config = {
        **paths,
        "method": "tour-hard",
        "k": 10,
        "lambda": 0.0,
        "labeler": "oracle",
        "seed": 0,
        "out": str(out / "report.jsonl"),
    }
    config_path = out / "config.json"
    config_path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return {**paths, "config": str(config_path)}
