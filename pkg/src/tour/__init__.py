"""Test-time optimization of query embeddings for dense retrieval.

Given a frozen corpus of context embeddings and an initial query vector,
the engine retrieves top-k candidates, scores them with a relevance
labeler, converts the scores into pseudo-relevance labels, and descends
the query vector against a marginal-likelihood (hard) or KL (soft)
objective, re-retrieving between steps. Classical Rocchio feedback and an
evaluation harness round out the toolkit.
"""

from .errors import (
    ConfigError,
    ContractError,
    DataError,
    FormatError,
    LabelerError,
    NumericError,
    ProtocolError,
    TourError,
    TransportError,
    TruncationError,
    ValidationError,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    config_from_dict,
    config_from_file,
    load_report,
    run_experiment,
    run_single_query,
    write_report,
)
from .labelers import (
    CachingLabeler,
    Labeler,
    LabelerStats,
    OracleLabeler,
    RelevanceScores,
    RemoteLabeler,
    SyntheticLabeler,
    contains_answer,
    judge_relevant,
    normalize_answer,
    oracle_score,
)
from .metrics import aggregate_scores, evaluate
from .optim import (
    OptimizerConfig,
    QueryState,
    TourOutcome,
    apply_update,
    grad_hard,
    grad_soft,
    loss_hard,
    loss_soft,
    retrieval_softmax,
    run_tour,
    schedule_eta,
    should_stop,
)
from .pseudo import PseudoLabels, make_pseudo_labels, select_hard_set, soft_distribution
from .rocchio import RocchioConfig, rocchio_update, run_prf
from .store import (
    CorpusMeta,
    EmbeddingMatrix,
    QueryMeta,
    RetrievalResult,
    RetrievedEntry,
    check_gold_ids,
    inner_products,
    load_corpus,
    load_embeddings,
    load_queries,
    read_corpus_meta,
    read_query_meta,
    top_k_search,
    write_embeddings,
    write_jsonl,
)
from .synth import SyntheticDataset, generate_synthetic, write_synthetic

__version__ = "0.1.0"

__all__ = [
    "CachingLabeler",
    "ConfigError",
    "ContractError",
    "CorpusMeta",
    "DataError",
    "EmbeddingMatrix",
    "ExperimentConfig",
    "ExperimentReport",
    "FormatError",
    "Labeler",
    "LabelerError",
    "LabelerStats",
    "NumericError",
    "OptimizerConfig",
    "OracleLabeler",
    "ProtocolError",
    "PseudoLabels",
    "QueryMeta",
    "QueryState",
    "RelevanceScores",
    "RemoteLabeler",
    "RetrievalResult",
    "RetrievedEntry",
    "RocchioConfig",
    "SyntheticDataset",
    "SyntheticLabeler",
    "TourError",
    "TourOutcome",
    "TransportError",
    "TruncationError",
    "ValidationError",
    "aggregate_scores",
    "apply_update",
    "check_gold_ids",
    "config_from_dict",
    "config_from_file",
    "contains_answer",
    "evaluate",
    "generate_synthetic",
    "grad_hard",
    "grad_soft",
    "inner_products",
    "judge_relevant",
    "load_corpus",
    "load_embeddings",
    "load_queries",
    "load_report",
    "loss_hard",
    "loss_soft",
    "make_pseudo_labels",
    "normalize_answer",
    "oracle_score",
    "read_corpus_meta",
    "read_query_meta",
    "retrieval_softmax",
    "rocchio_update",
    "run_experiment",
    "run_prf",
    "run_single_query",
    "run_tour",
    "schedule_eta",
    "select_hard_set",
    "should_stop",
    "soft_distribution",
    "top_k_search",
    "write_embeddings",
    "write_jsonl",
    "write_report",
]
