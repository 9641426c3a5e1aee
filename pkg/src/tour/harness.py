"""Experiment orchestration: config, method dispatch, report emission.

One run loads a corpus and query set, applies a single retrieval method to
every query, and writes a JSON-lines report: one object per query, in
query-id order, followed by one {"aggregate": ...} object. All fields
except wall-clock timings are deterministic given the config and seed.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .labelers import (
    CachingLabeler,
    LabelerStats,
    OracleLabeler,
    RelevanceScores,
    RemoteLabeler,
    SyntheticLabeler,
    contains_answer,
    judge_relevant,
)
from .metrics import aggregate_scores, evaluate
from .optim import OptimizerConfig, run_tour
from .rocchio import RocchioConfig, run_prf
from .store import (
    CorpusMeta,
    QueryMeta,
    RetrievalResult,
    check_gold_ids,
    load_corpus,
    load_queries,
    top_k_search,
)

METHODS = ("baseline", "rerank", "rocchio", "tour-hard", "tour-soft")
LABELER_KINDS = ("oracle", "synthetic", "remote")

# CLI override keys that route into the nested optimizer config.
_OPTIMIZER_OVERRIDES = ("eta", "max_iters", "p", "tau")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one run; mirrors the JSON config file."""

    corpus_embeddings: str
    corpus_meta: str
    query_embeddings: str
    query_meta: str
    method: str = "baseline"
    k: int = 10
    lambda_: float = 0.1
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    rocchio: RocchioConfig = field(default_factory=RocchioConfig)
    labeler: str = "oracle"
    remote_url: str | None = None
    remote_timeout: float = 10.0
    remote_max_retries: int = 2
    remote_max_batch: int = 32
    workers: int = 0
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.labeler not in LABELER_KINDS:
            raise ConfigError(
                f"labeler must be one of {LABELER_KINDS}, got {self.labeler!r}"
            )
        if not 0.0 <= self.lambda_ <= 1.0:
            raise ConfigError(f"lambda must be in [0, 1], got {self.lambda_}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.workers < 0:
            raise ConfigError(f"workers must be >= 0, got {self.workers}")
        if self.method in ("rerank", "tour-hard", "tour-soft"):
            if self.labeler == "remote" and not self.remote_url:
                raise ConfigError("labeler 'remote' requires remote_url")


def config_from_dict(data: Mapping) -> ExperimentConfig:
    """Build a config from JSON-shaped data; unknown keys are rejected."""
    known = {f.name for f in fields(ExperimentConfig)} - {"lambda_"} | {"lambda"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(data)
    if "lambda" in kwargs:
        kwargs["lambda_"] = kwargs.pop("lambda")
    k_top = kwargs.get("k", ExperimentConfig.k)
    for name, cls in (("optimizer", OptimizerConfig), ("rocchio", RocchioConfig)):
        sub = kwargs.get(name)
        if sub is None:
            continue
        if not isinstance(sub, Mapping):
            raise ConfigError(f"{name} must be an object, got {type(sub).__name__}")
        if "k" in sub and int(sub["k"]) != int(k_top):
            raise ConfigError(
                f"{name}.k = {sub['k']} contradicts top-level k = {k_top}"
            )
        try:
            kwargs[name] = cls(**sub)
        except TypeError as exc:
            raise ConfigError(f"bad {name} config: {exc}") from None
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad config: {exc}") from None


def config_from_file(
    path: str | Path, overrides: Mapping | None = None
) -> ExperimentConfig:
    """Load a JSON config file, applying flag-style overrides on top.

    Override keys eta/max_iters/p/tau route into the optimizer section;
    everything else replaces a top-level field. None values are ignored.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in _OPTIMIZER_OVERRIDES:
            section = dict(data.get("optimizer") or {})
            section[key] = value
            data["optimizer"] = section
        else:
            data[key] = value
    return config_from_dict(data)


@dataclass
class ExperimentReport:
    """Report rows in query-id order plus the aggregate metrics object."""

    rows: list[dict]
    aggregate: dict


def build_labeler(config: ExperimentConfig) -> CachingLabeler | None:
    """Caching labeler for methods that consult one; None otherwise."""
    if config.method in ("baseline", "rocchio"):
        return None
    if config.labeler == "oracle":
        backend = OracleLabeler()
    elif config.labeler == "synthetic":
        backend = SyntheticLabeler(seed=config.seed)
    else:
        backend = RemoteLabeler(
            config.remote_url,
            timeout=config.remote_timeout,
            max_retries=config.remote_max_retries,
            max_batch=config.remote_max_batch,
        )
    return CachingLabeler(backend)


def _entry(
    context_id: str,
    rank: int,
    sim: float,
    s: float | None,
    final_score: float,
    query: QueryMeta,
    candidate: CorpusMeta,
) -> dict:
    return {
        "context_id": context_id,
        "rank": rank,
        "sim": float(sim),
        "s": None if s is None else float(s),
        "final_score": float(final_score),
        "relevant": judge_relevant(query, candidate),
        "answer_match": bool(query.answers)
        and contains_answer(candidate.text, query.answers),
    }


def _sim_entries(
    result: RetrievalResult, query: QueryMeta, corpus: Mapping[str, CorpusMeta]
) -> list[dict]:
    return [
        _entry(e.context_id, e.rank, e.sim, None, e.sim, query, corpus[e.context_id])
        for e in result.entries
    ]


def _aggregated_entries(
    result: RetrievalResult,
    scores: RelevanceScores,
    lam: float,
    query: QueryMeta,
    corpus: Mapping[str, CorpusMeta],
) -> list[dict]:
    """Interpolate sim with labeler score, then re-rank deterministically."""
    by_id = dict(scores.scores)
    ranked = sorted(
        (
            (-aggregate_scores(e.sim, by_id[e.context_id], lam), e.context_id, e)
            for e in result.entries
        ),
    )
    return [
        _entry(e.context_id, rank, e.sim, by_id[e.context_id], -neg, query, corpus[e.context_id])
        for rank, (neg, _, e) in enumerate(ranked, start=1)
    ]


def run_single_query(
    query: QueryMeta,
    q0: np.ndarray,
    index,
    corpus: Mapping[str, CorpusMeta],
    labeler: CachingLabeler | None,
    config: ExperimentConfig,
) -> dict:
    """One report row; never raises for per-query trouble."""
    start = time.perf_counter()
    row = {
        "query_id": query.id,
        "method": config.method,
        "k": config.k,
        "lambda": config.lambda_,
        "iterations_used": 0,
        "stop_reason": None,
        "backend_calls": 0,
        "cache_hits": 0,
        "top1_answer_match": False,
        "entries": [],
    }
    try:
        if config.method == "baseline":
            result = top_k_search(index, q0, config.k, query_id=query.id)
            row["entries"] = _sim_entries(result, query, corpus)
        elif config.method == "rerank":
            result = top_k_search(index, q0, config.k, query_id=query.id)
            scores = labeler.score_candidates(
                query, [corpus[cid] for cid in result.context_ids()]
            )
            row["entries"] = _aggregated_entries(
                result, scores, config.lambda_, query, corpus
            )
        elif config.method == "rocchio":
            outcome = run_prf(query, q0, index, replace(config.rocchio, k=config.k))
            row["iterations_used"] = outcome.iterations_used
            row["stop_reason"] = outcome.stop_reason
            row["entries"] = _sim_entries(outcome.final_candidates, query, corpus)
        else:
            variant = "hard" if config.method == "tour-hard" else "soft"
            ocfg = replace(config.optimizer, k=config.k, variant=variant)
            outcome = run_tour(query, q0, index, labeler, ocfg, corpus)
            row["iterations_used"] = outcome.iterations_used
            row["stop_reason"] = outcome.stop_reason
            if outcome.final_scores is not None:
                row["entries"] = _aggregated_entries(
                    outcome.final_candidates,
                    outcome.final_scores,
                    config.lambda_,
                    query,
                    corpus,
                )
    except Exception as exc:  # noqa: BLE001 - per-query isolation is the contract
        row["error"] = f"{type(exc).__name__}: {exc}"
        row["entries"] = []
    if labeler is not None:
        stats = labeler.stats_for(query.id)
        row["backend_calls"] = stats.backend_calls
        row["cache_hits"] = stats.cache_hits
    if row["entries"]:
        row["top1_answer_match"] = row["entries"][0]["answer_match"]
    row["wall_ms"] = max((time.perf_counter() - start) * 1000.0, 1e-6)
    return row


def default_k_values(k: int) -> list[int]:
    return sorted({v for v in (1, 5, k) if v <= k})


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run the configured method over every query and assemble the report.

    Per-query failures become error rows; failures to load inputs abort.
    Rows come out keyed and ordered by query id regardless of worker
    scheduling.
    """
    index, corpus_meta = load_corpus(config.corpus_embeddings, config.corpus_meta)
    query_matrix, query_meta = load_queries(config.query_embeddings, config.query_meta)
    if index.dim != query_matrix.dim:
        raise DataError(
            f"corpus dim {index.dim} != query dim {query_matrix.dim}"
        )
    check_gold_ids(query_meta, index.ids)
    corpus = {m.id: m for m in corpus_meta}
    labeler = build_labeler(config)
    ordered = sorted(query_meta, key=lambda m: m.id)

    def work(query: QueryMeta) -> dict:
        return run_single_query(
            query, query_matrix.row(query.id), index, corpus, labeler, config
        )

    workers = config.workers or os.cpu_count() or 1
    if workers == 1 or len(ordered) <= 1:
        rows = [work(q) for q in ordered]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(work, ordered))

    aggregate = {
        "method": config.method,
        "k": config.k,
        "lambda": config.lambda_,
        "labeler": config.labeler if labeler is not None else None,
        "seed": config.seed,
        **evaluate(rows, query_meta, default_k_values(config.k)),
        "mean_wall_ms": sum(r["wall_ms"] for r in rows) / len(rows) if rows else 0.0,
    }
    report = ExperimentReport(rows=rows, aggregate=aggregate)
    if config.out:
        write_report(config.out, report)
    return report


def write_report(path: str | Path, report: ExperimentReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in report.rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
        fh.write(json.dumps({"aggregate": report.aggregate}, ensure_ascii=False) + "\n")


def load_report(path: str | Path) -> ExperimentReport:
    """Read a report file back into rows plus the aggregate object."""
    rows: list[dict] = []
    aggregate: dict = {}
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read report {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if "aggregate" in obj and "query_id" not in obj:
                aggregate = obj["aggregate"]
            else:
                rows.append(obj)
    if not rows:
        raise DataError(f"{path}: no report rows found")
    return ExperimentReport(rows=rows, aggregate=aggregate)
