"""Embedding storage and exact maximum-inner-product search.

Vectors live in a flat binary file (float32, row-major) with a JSON-lines
sidecar carrying per-row metadata. Search is exhaustive and deterministic:
scores accumulate in float64 regardless of the scan partitioning, and ties
are broken by context id ascending.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, FormatError, TruncationError, ValidationError

MAGIC = b"TOURMB01"
_HEADER = struct.Struct("<II")

# Rows scanned per chunk during search; bounds the float64 working set.
DEFAULT_CHUNK_SIZE = 65536


@dataclass(frozen=True)
class CorpusMeta:
    """Text record backing one context row."""

    id: str
    title: str
    text: str


@dataclass(frozen=True)
class QueryMeta:
    """Text record backing one query row.

    ``answers`` and ``gold_ids`` feed only the oracle labeler and the
    evaluation metrics; the optimizer never sees them.
    """

    id: str
    text: str
    answers: tuple[str, ...] = ()
    gold_ids: tuple[str, ...] | None = None


class RetrievedEntry(NamedTuple):
    context_id: str
    rank: int
    sim: float


@dataclass
class RetrievalResult:
    """Top-k candidates for one query state, best first."""

    query_id: str
    entries: list[RetrievedEntry] = field(default_factory=list)

    def context_ids(self) -> list[str]:
        return [e.context_id for e in self.entries]

    def sims(self) -> np.ndarray:
        return np.array([e.sim for e in self.entries], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.entries)


class EmbeddingMatrix:
    """Immutable row-major collection of fixed-dimension vectors.

    Rows are float32 (the on-disk precision); ids align 1:1 with rows and
    must be unique. The underlying array is write-protected so the matrix
    can be shared across worker threads.
    """

    def __init__(self, data: np.ndarray, ids: Sequence[str] | None = None):
        data = np.ascontiguousarray(data, dtype=np.float32)
        if data.ndim != 2:
            raise ValidationError(f"embedding data must be 2-D, got shape {data.shape}")
        if data.shape[1] < 1:
            raise ValidationError("embedding dimension must be positive")
        if not np.isfinite(data).all():
            raise ValidationError("embedding data contains NaN or Inf")
        if ids is None:
            ids = [str(i) for i in range(data.shape[0])]
        ids = [str(i) for i in ids]
        if len(ids) != data.shape[0]:
            raise ValidationError(
                f"got {len(ids)} ids for {data.shape[0]} rows"
            )
        if len(set(ids)) != len(ids):
            raise ValidationError("ids must be unique")
        data.setflags(write=False)
        self.data = data
        self.ids = ids
        self._id_array = np.asarray(ids, dtype=np.str_)
        self._row_of = {cid: i for i, cid in enumerate(ids)}

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def row_index(self, context_id: str) -> int:
        try:
            return self._row_of[context_id]
        except KeyError:
            raise ValidationError(f"unknown context id {context_id!r}") from None

    def row(self, context_id: str) -> np.ndarray:
        return self.data[self.row_index(context_id)]

    def rows(self, context_ids: Iterable[str]) -> np.ndarray:
        """Stack the named rows in the given order (float64 copy)."""
        idx = [self.row_index(cid) for cid in context_ids]
        return self.data[idx].astype(np.float64)


def write_embeddings(path: str | Path, data: np.ndarray) -> None:
    """Write a float32 matrix in the flat binary layout."""
    data = np.ascontiguousarray(data, dtype=np.float32)
    if data.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got shape {data.shape}")
    if not np.isfinite(data).all():
        raise ValidationError("refusing to write NaN or Inf values")
    count, dim = data.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(count, dim))
        fh.write(data.astype("<f4").tobytes())


def load_embeddings(path: str | Path, ids: Sequence[str] | None = None) -> EmbeddingMatrix:
    """Load a flat binary embedding file.

    Raises FormatError on a bad magic header, TruncationError when the
    declared count*dim disagrees with the payload length, and
    ValidationError on non-finite values.
    """
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + _HEADER.size:
        raise FormatError(f"{path}: file too short for header")
    if raw[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:len(MAGIC)]!r}")
    count, dim = _HEADER.unpack_from(raw, len(MAGIC))
    if dim < 1:
        raise FormatError(f"{path}: declared dim must be positive, got {dim}")
    payload = raw[len(MAGIC) + _HEADER.size :]
    expected = count * dim * 4
    if len(payload) != expected:
        raise TruncationError(
            f"{path}: declared {count}x{dim} needs {expected} payload bytes, "
            f"found {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(count, dim).copy()
    if not np.isfinite(data).all():
        raise ValidationError(f"{path}: payload contains NaN or Inf")
    return EmbeddingMatrix(data, ids=ids)


def read_corpus_meta(path: str | Path) -> list[CorpusMeta]:
    """Read corpus metadata records from a JSON-lines file."""
    records = []
    for lineno, obj in _iter_jsonl(path):
        try:
            records.append(
                CorpusMeta(id=str(obj["id"]), title=str(obj.get("title", "")), text=str(obj["text"]))
            )
        except KeyError as exc:
            raise ValidationError(f"{path}:{lineno}: missing field {exc}") from None
    return records


def read_query_meta(path: str | Path) -> list[QueryMeta]:
    """Read query metadata records from a JSON-lines file."""
    records = []
    for lineno, obj in _iter_jsonl(path):
        try:
            gold = obj.get("gold_ids")
            records.append(
                QueryMeta(
                    id=str(obj["id"]),
                    text=str(obj["text"]),
                    answers=tuple(str(a) for a in obj.get("answers", [])),
                    gold_ids=None if gold is None else tuple(str(g) for g in gold),
                )
            )
        except KeyError as exc:
            raise ValidationError(f"{path}:{lineno}: missing field {exc}") from None
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise ValidationError(f"{path}: query ids must be unique")
    return records


def write_jsonl(path: str | Path, records: Iterable[Mapping]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _iter_jsonl(path: str | Path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON: {exc}") from None


def load_corpus(emb_path: str | Path, meta_path: str | Path) -> tuple[EmbeddingMatrix, list[CorpusMeta]]:
    """Load corpus embeddings plus sidecar metadata, ids taken from the sidecar."""
    meta = read_corpus_meta(meta_path)
    matrix = load_embeddings(emb_path, ids=[m.id for m in meta])
    return matrix, meta


def load_queries(emb_path: str | Path, meta_path: str | Path) -> tuple[EmbeddingMatrix, list[QueryMeta]]:
    """Load query embeddings plus sidecar metadata, ids taken from the sidecar."""
    meta = read_query_meta(meta_path)
    matrix = load_embeddings(emb_path, ids=[m.id for m in meta])
    return matrix, meta


def check_gold_ids(queries: Iterable[QueryMeta], corpus_ids: Iterable[str]) -> None:
    """Require every referenced gold context to exist in the corpus."""
    known = set(corpus_ids)
    for q in queries:
        if q.gold_ids is None:
            continue
        missing = [g for g in q.gold_ids if g not in known]
        if missing:
            raise ValidationError(f"query {q.id!r} references unknown gold ids {missing}")


def inner_products(
    matrix: EmbeddingMatrix, query_vec: np.ndarray, chunk_size: int = DEFAULT_CHUNK_SIZE
) -> np.ndarray:
    """All row-vs-query inner products, accumulated in float64.

    The scan is chunked over rows. Each row is reduced independently with
    the same elementwise-multiply-then-sum kernel (never a shape-dependent
    BLAS path), so results are bit-identical for every chunk_size.
    """
    q = np.asarray(query_vec, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != matrix.dim:
        raise ValidationError(
            f"query vector has shape {np.shape(query_vec)}, matrix dim is {matrix.dim}"
        )
    if not np.isfinite(q).all():
        raise ValidationError("query vector contains NaN or Inf")
    n = matrix.count
    sims = np.empty(n, dtype=np.float64)
    for start in range(0, n, max(1, chunk_size)):
        stop = min(n, start + max(1, chunk_size))
        sims[start:stop] = (matrix.data[start:stop].astype(np.float64) * q).sum(axis=1)
    return sims


def top_k_search(
    matrix: EmbeddingMatrix,
    query_vec: np.ndarray,
    k: int,
    *,
    query_id: str = "",
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> RetrievalResult:
    """Exact exhaustive top-k by inner product.

    Ordering is total and deterministic: similarity descending, then
    context id ascending. Returns min(k, count) entries; an empty matrix
    yields an empty result.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    sims = inner_products(matrix, query_vec, chunk_size=chunk_size)
    n = matrix.count
    if n == 0:
        return RetrievalResult(query_id=query_id, entries=[])
    kk = min(k, n)
    if kk == n:
        cand = np.arange(n)
    else:
        # Partition for the k largest, then widen to every row tied with
        # the boundary value so id tie-breaking stays exact.
        part = np.argpartition(-sims, kk - 1)[:kk]
        boundary = sims[part].min()
        cand = np.flatnonzero(sims >= boundary)
    order = cand[np.lexsort((matrix._id_array[cand], -sims[cand]))][:kk]
    entries = [
        RetrievedEntry(context_id=matrix.ids[i], rank=r + 1, sim=float(sims[i]))
        for r, i in enumerate(order)
    ]
    return RetrievalResult(query_id=query_id, entries=entries)
