"""Score aggregation and retrieval metrics over report rows.

A report row is the JSON object the harness emits for one query: its
ranked candidate entries plus bookkeeping. Metrics read the per-entry
relevance flags stamped at run time when present and fall back to gold-id
membership otherwise, so a report can be re-evaluated without the corpus.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, DataError
from .store import QueryMeta


def aggregate_scores(sim: float, s: float, lam: float):
    """Interpolate retrieval similarity and labeler score: lam*s + (1-lam)*sim."""
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must be in [0, 1], got {lam}")
    return lam * s + (1.0 - lam) * sim


def _entry_relevant(entry: Mapping, query: QueryMeta) -> bool:
    if "relevant" in entry:
        return bool(entry["relevant"])
    if query.gold_ids:
        return entry["context_id"] in query.gold_ids
    return False


def _first_relevant_rank(row: Mapping, query: QueryMeta, k: int) -> int | None:
    for pos, entry in enumerate(row.get("entries", ())[:k], start=1):
        if _entry_relevant(entry, query):
            return pos
    return None


def evaluate(
    rows: Iterable[Mapping],
    queries: Iterable[QueryMeta] | Mapping[str, QueryMeta],
    k_values: Sequence[int],
) -> dict:
    """Acc@k, MRR@k, and top-1 answer-match accuracy over report rows.

    Acc@k counts queries with at least one relevant candidate in the top
    k; MRR@k averages 1/rank of the first relevant candidate, 0 when none
    appears. Rows with errors (empty entries) count as misses.
    """
    if isinstance(queries, Mapping):
        by_id = dict(queries)
    else:
        by_id = {q.id: q for q in queries}
    k_values = sorted(set(int(k) for k in k_values))
    if not k_values or k_values[0] < 1:
        raise ConfigError(f"k values must be positive, got {k_values}")
    rows = list(rows)
    if not rows:
        raise DataError("no report rows to evaluate")

    hits = {k: 0 for k in k_values}
    rr_sums = {k: 0.0 for k in k_values}
    answer_matches = 0
    for row in rows:
        qid = row.get("query_id")
        if qid not in by_id:
            raise DataError(f"report row references unknown query {qid!r}")
        query = by_id[qid]
        for k in k_values:
            rank = _first_relevant_rank(row, query, k)
            if rank is not None:
                hits[k] += 1
                rr_sums[k] += 1.0 / rank
        entries = row.get("entries", ())
        if "top1_answer_match" in row:
            answer_matches += bool(row["top1_answer_match"])
        elif entries:
            answer_matches += bool(entries[0].get("answer_match", False))

    n = len(rows)
    metrics: dict = {"n_queries": n, "top1_answer_match": answer_matches / n}
    for k in k_values:
        metrics[f"acc@{k}"] = hits[k] / n
        metrics[f"mrr@{k}"] = rr_sums[k] / n
    return metrics
