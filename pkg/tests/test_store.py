"""Embedding store: binary round trips, validation, and exact search."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tour.errors import ConfigError, FormatError, TruncationError, ValidationError
from tour.store import (
    EmbeddingMatrix,
    inner_products,
    load_corpus,
    load_embeddings,
    load_queries,
    read_corpus_meta,
    read_query_meta,
    top_k_search,
    write_embeddings,
    write_jsonl,
    check_gold_ids,
    CorpusMeta,
    QueryMeta,
)

from reference import naive_top_k


class TestBinaryFormat:
    def test_round_trip_exact(self, tmp_path):
        """float32 payloads survive a write/load cycle bit for bit."""
        rng = np.random.default_rng(11)
        data = rng.standard_normal((7, 5)).astype(np.float32)
        path = tmp_path / "vecs.emb"
        write_embeddings(path, data)
        loaded = load_embeddings(path)
        assert loaded.count == 7 and loaded.dim == 5
        np.testing.assert_array_equal(loaded.data, data)

    def test_header_layout(self, tmp_path):
        """Magic, little-endian u32 count and dim, then raw rows."""
        data = np.arange(6, dtype=np.float32).reshape(2, 3)
        path = tmp_path / "vecs.emb"
        write_embeddings(path, data)
        raw = path.read_bytes()
        assert raw[:8] == b"TOURMB01"
        count, dim = struct.unpack_from("<II", raw, 8)
        assert (count, dim) == (2, 3)
        assert raw[16:] == data.astype("<f4").tobytes()

    def test_empty_matrix_round_trip(self, tmp_path):
        """count=0 is a legal file; searching it yields an empty result."""
        path = tmp_path / "empty.emb"
        path.write_bytes(b"TOURMB01" + struct.pack("<II", 0, 4))
        loaded = load_embeddings(path)
        assert loaded.count == 0 and loaded.dim == 4
        assert top_k_search(loaded, np.ones(4), 3).entries == []

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.emb"
        path.write_bytes(b"NOTMAGIC" + struct.pack("<II", 1, 1) + b"\x00" * 4)
        with pytest.raises(FormatError):
            load_embeddings(path)

    def test_short_file_rejected(self, tmp_path):
        path = tmp_path / "short.emb"
        path.write_bytes(b"TOURMB01\x01")
        with pytest.raises(FormatError):
            load_embeddings(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "trunc.emb"
        path.write_bytes(b"TOURMB01" + struct.pack("<II", 3, 4) + b"\x00" * 40)
        with pytest.raises(TruncationError):
            load_embeddings(path)

    def test_nonfinite_payload_rejected(self, tmp_path):
        payload = np.array([[np.inf]], dtype="<f4").tobytes()
        path = tmp_path / "inf.emb"
        path.write_bytes(b"TOURMB01" + struct.pack("<II", 1, 1) + payload)
        with pytest.raises(ValidationError):
            load_embeddings(path)

    def test_zero_dim_rejected(self, tmp_path):
        path = tmp_path / "dim0.emb"
        path.write_bytes(b"TOURMB01" + struct.pack("<II", 0, 0))
        with pytest.raises(FormatError):
            load_embeddings(path)

    def test_write_refuses_nan(self, tmp_path):
        with pytest.raises(ValidationError):
            write_embeddings(tmp_path / "nan.emb", np.array([[np.nan]]))


class TestEmbeddingMatrix:
    def test_rows_follow_requested_order(self):
        data = np.eye(3, dtype=np.float32)
        m = EmbeddingMatrix(data, ids=["a", "b", "c"])
        picked = m.rows(["c", "a"])
        assert picked.dtype == np.float64
        np.testing.assert_array_equal(picked, np.array([[0, 0, 1], [1, 0, 0]], float))

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValidationError):
            EmbeddingMatrix(np.zeros((2, 2), np.float32), ids=["x", "x"])

    def test_id_count_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            EmbeddingMatrix(np.zeros((2, 2), np.float32), ids=["only"])

    def test_unknown_id_rejected(self):
        m = EmbeddingMatrix(np.zeros((1, 2), np.float32), ids=["a"])
        with pytest.raises(ValidationError):
            m.row("zzz")

    def test_data_is_write_protected(self):
        m = EmbeddingMatrix(np.zeros((1, 2), np.float32))
        with pytest.raises(ValueError):
            m.data[0, 0] = 1.0


class TestSidecars:
    def test_corpus_round_trip(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        write_jsonl(path, [{"id": "c1", "title": "T", "text": "body"}])
        (rec,) = read_corpus_meta(path)
        assert rec == CorpusMeta(id="c1", title="T", text="body")

    def test_query_round_trip(self, tmp_path):
        path = tmp_path / "queries.jsonl"
        write_jsonl(
            path,
            [{"id": "q1", "text": "who?", "answers": ["x"], "gold_ids": ["c1"]}],
        )
        (rec,) = read_query_meta(path)
        assert rec == QueryMeta(id="q1", text="who?", answers=("x",), gold_ids=("c1",))

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "c1"}\n', encoding="utf-8")
        with pytest.raises(ValidationError):
            read_corpus_meta(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text("{nope}\n", encoding="utf-8")
        with pytest.raises(ValidationError):
            read_corpus_meta(path)

    def test_duplicate_query_ids_rejected(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        write_jsonl(path, [{"id": "q", "text": "a"}, {"id": "q", "text": "b"}])
        with pytest.raises(ValidationError):
            read_query_meta(path)

    def test_loaders_take_ids_from_sidecar(self, tmp_path):
        data = np.eye(2, dtype=np.float32)
        write_embeddings(tmp_path / "c.emb", data)
        write_jsonl(
            tmp_path / "c.jsonl",
            [{"id": "ctx-b", "text": "b"}, {"id": "ctx-a", "text": "a"}],
        )
        matrix, meta = load_corpus(tmp_path / "c.emb", tmp_path / "c.jsonl")
        assert matrix.ids == ["ctx-b", "ctx-a"]
        assert [m.id for m in meta] == ["ctx-b", "ctx-a"]

        write_embeddings(tmp_path / "q.emb", data)
        write_jsonl(
            tmp_path / "q.jsonl",
            [{"id": "q1", "text": "?"}, {"id": "q2", "text": "?"}],
        )
        qmat, qmeta = load_queries(tmp_path / "q.emb", tmp_path / "q.jsonl")
        assert qmat.ids == ["q1", "q2"]

    def test_gold_id_check(self):
        queries = [QueryMeta(id="q", text="?", gold_ids=("c9",))]
        with pytest.raises(ValidationError):
            check_gold_ids(queries, ["c1", "c2"])
        check_gold_ids(queries, ["c9"])


class TestInnerProducts:
    def test_matches_per_row_reduction(self):
        rng = np.random.default_rng(3)
        m = EmbeddingMatrix(rng.standard_normal((50, 8)).astype(np.float32))
        q = rng.standard_normal(8)
        sims = inner_products(m, q)
        np.testing.assert_array_equal(
            sims, (m.data.astype(np.float64) * q).sum(axis=1)
        )
        # Same math as a BLAS matmul up to reduction-order rounding.
        np.testing.assert_allclose(sims, m.data.astype(np.float64) @ q, rtol=1e-13)

    def test_chunk_size_does_not_change_results(self):
        """Accumulation is per-row float64, so chunking is invisible."""
        rng = np.random.default_rng(4)
        m = EmbeddingMatrix(rng.standard_normal((101, 16)).astype(np.float32))
        q = rng.standard_normal(16)
        base = inner_products(m, q, chunk_size=101)
        for chunk in (1, 7, 100, 10_000):
            np.testing.assert_array_equal(
                inner_products(m, q, chunk_size=chunk), base
            )

    def test_dim_mismatch_rejected(self):
        m = EmbeddingMatrix(np.zeros((2, 3), np.float32))
        with pytest.raises(ValidationError):
            inner_products(m, np.zeros(4))

    def test_nonfinite_query_rejected(self):
        m = EmbeddingMatrix(np.zeros((2, 3), np.float32))
        with pytest.raises(ValidationError):
            inner_products(m, np.array([1.0, np.nan, 0.0]))


class TestTopKSearch:
    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(5)
        data = rng.standard_normal((200, 12)).astype(np.float32)
        ids = [f"c{i:03d}" for i in range(200)]
        m = EmbeddingMatrix(data, ids=ids)
        q = rng.standard_normal(12)
        for k in (1, 3, 17, 200, 500):
            result = top_k_search(m, q, k)
            want_ids, want_sims = naive_top_k(data, ids, q, k)
            assert result.context_ids() == want_ids
            np.testing.assert_array_equal(result.sims(), want_sims)

    def test_ties_break_by_id_ascending(self):
        """Duplicate vectors share a sim; ids decide the order."""
        row = np.ones((1, 4), dtype=np.float32)
        data = np.vstack([row, row, row, np.zeros((1, 4), np.float32)])
        m = EmbeddingMatrix(data, ids=["z", "m", "a", "other"])
        result = top_k_search(m, np.ones(4), 2)
        assert result.context_ids() == ["a", "m"]

    def test_boundary_tie_not_dropped_by_partition(self):
        """Rows tied at the k-th sim must still resolve by id."""
        data = np.zeros((10, 2), dtype=np.float32)
        data[:, 0] = [5, 4, 4, 4, 4, 4, 4, 4, 4, 3]
        ids = [f"t{i}" for i in range(10)]
        m = EmbeddingMatrix(data, ids=ids)
        result = top_k_search(m, np.array([1.0, 0.0]), 3)
        assert result.context_ids() == ["t0", "t1", "t2"]

    def test_k_larger_than_corpus_clamps(self):
        m = EmbeddingMatrix(np.eye(3, dtype=np.float32))
        assert len(top_k_search(m, np.ones(3), 50)) == 3

    def test_k_below_one_rejected(self):
        m = EmbeddingMatrix(np.eye(2, dtype=np.float32))
        with pytest.raises(ConfigError):
            top_k_search(m, np.ones(2), 0)

    def test_ranks_are_one_based_and_sims_sorted(self):
        rng = np.random.default_rng(6)
        m = EmbeddingMatrix(rng.standard_normal((30, 5)).astype(np.float32))
        result = top_k_search(m, rng.standard_normal(5), 10)
        assert [e.rank for e in result.entries] == list(range(1, 11))
        sims = result.sims()
        assert np.all(sims[:-1] >= sims[1:])

    @settings(max_examples=60, deadline=None)
    @given(
        n=st.integers(min_value=1, max_value=40),
        dim=st.integers(min_value=1, max_value=6),
        k=st.integers(min_value=1, max_value=50),
        seed=st.integers(min_value=0, max_value=2**31),
        dup=st.booleans(),
    )
    def test_property_matches_naive(self, n, dim, k, seed, dup):
        """Search equals the full-sort oracle on arbitrary inputs."""
        rng = np.random.default_rng(seed)
        data = rng.integers(-3, 4, size=(n, dim)).astype(np.float32)
        if dup and n > 1:
            data[n // 2] = data[0]
        ids = [f"c{i}" for i in range(n)]
        q = rng.integers(-3, 4, size=dim).astype(np.float64)
        result = top_k_search(EmbeddingMatrix(data, ids=ids), q, k)
        want_ids, want_sims = naive_top_k(data, ids, q, k)
        assert result.context_ids() == want_ids
        np.testing.assert_array_equal(result.sims(), want_sims)
