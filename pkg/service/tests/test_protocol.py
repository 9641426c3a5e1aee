"""Wire-protocol conformance, driven by the retrieval package's remote client."""

import concurrent.futures
import math

import pytest
import requests

from tour.errors import ContractError, ProtocolError
from tour.labelers import RemoteLabeler
from tour.store import CorpusMeta, QueryMeta

from conftest import SERVER_MAX_BATCH

QUERY = QueryMeta(id="q-capital", text="What is the capital of France?")

RELEVANT = "Paris is the capital and most populous city of France."
FILLERS = [
    "The recipe calls for two cups of flour and a pinch of salt.",
    "Quarterly earnings rose on strong demand for farm equipment.",
    "The hiking trail closes at dusk during the winter months.",
    "A new bus route will connect the harbor with the stadium.",
]


def make_candidates(texts):
    return [CorpusMeta(id=f"c{i}", title="", text=t) for i, t in enumerate(texts)]


def post_score(base_url, payload, **kwargs):
    return requests.post(f"{base_url}/score", timeout=30, **{"json": payload, **kwargs})


class TestHealth:
    def test_health_reports_ok(self, base_url):
        resp = requests.get(f"{base_url}/health", timeout=5)
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}


class TestAlignment:
    @pytest.mark.parametrize("relevant_pos", [0, 2, 4])
    def test_scores_follow_candidate_order(self, base_url, relevant_pos):
        texts = list(FILLERS)
        texts.insert(relevant_pos, RELEVANT)
        candidates = make_candidates(texts)
        result = RemoteLabeler(base_url).score_candidates(QUERY, candidates)
        assert result.query_id == QUERY.id
        assert result.context_ids == [c.id for c in candidates]
        assert all(math.isfinite(v) for v in result.values)
        assert int(result.values.argmax()) == relevant_pos

    def test_client_side_batching_preserves_alignment(self, base_url):
        texts = [f"Filler sentence number {i} about nothing in particular." for i in range(12)]
        texts[7] = RELEVANT
        candidates = make_candidates(texts)
        result = RemoteLabeler(base_url, max_batch=5).score_candidates(QUERY, candidates)
        assert result.context_ids == [f"c{i}" for i in range(12)]
        assert int(result.values.argmax()) == 7


class TestDeterminism:
    def test_repeated_request_returns_identical_body(self, base_url):
        payload = {
            "query": QUERY.text,
            "candidates": [{"id": f"c{i}", "text": t} for i, t in enumerate(FILLERS)],
        }
        first = post_score(base_url, payload)
        second = post_score(base_url, payload)
        assert first.status_code == second.status_code == 200
        assert first.json() == second.json()

    def test_client_round_trip_is_deterministic(self, base_url):
        candidates = make_candidates([RELEVANT] + FILLERS)
        labeler = RemoteLabeler(base_url)
        first = labeler.score_candidates(QUERY, candidates)
        second = labeler.score_candidates(QUERY, candidates)
        assert first.scores == second.scores


class TestStatelessness:
    def test_concurrent_requests_match_serial_results(self, base_url):
        payloads = [
            {
                "query": question,
                "candidates": [{"id": f"c{i}", "text": t} for i, t in enumerate(texts)],
            }
            for question, texts in [
                ("What is the capital of France?", [RELEVANT] + FILLERS[:2]),
                ("What is the tallest mountain on Earth?", FILLERS[:3]),
            ]
        ]
        serial = [post_score(base_url, p).json() for p in payloads]
        jobs = [payloads[i % 2] for i in range(8)]
        with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(lambda p: post_score(base_url, p).json(), jobs))
        for i, body in enumerate(results):
            assert body == serial[i % 2]


class TestValidation:
    @pytest.mark.parametrize(
        "payload",
        [
            {},
            {"query": "q"},
            {"candidates": [{"id": "a", "text": "t"}]},
            {"query": "q", "candidates": []},
            {"query": "   ", "candidates": [{"id": "a", "text": "t"}]},
            {"query": "q", "candidates": [{"id": "a"}]},
            {"query": "q", "candidates": [{"text": "t"}]},
            {"query": "q", "candidates": "not a list"},
            {"query": 5, "candidates": [{"id": "a", "text": "t"}]},
        ],
    )
    def test_malformed_request_is_rejected(self, base_url, payload):
        resp = post_score(base_url, payload)
        assert 400 <= resp.status_code < 500
        assert resp.json()

    def test_non_json_body_is_rejected(self, base_url):
        resp = post_score(
            base_url,
            None,
            data="not json",
            headers={"Content-Type": "application/json"},
        )
        assert 400 <= resp.status_code < 500

    def test_oversized_batch_is_rejected(self, base_url):
        n = SERVER_MAX_BATCH + 1
        payload = {
            "query": "q",
            "candidates": [{"id": f"c{i}", "text": "t"} for i in range(n)],
        }
        resp = post_score(base_url, payload)
        assert resp.status_code == 413
        assert str(SERVER_MAX_BATCH) in resp.json()["detail"]

    def test_client_surfaces_oversized_batch_as_protocol_error(self, base_url):
        candidates = make_candidates(["text"] * (SERVER_MAX_BATCH + 1))
        labeler = RemoteLabeler(base_url, max_batch=SERVER_MAX_BATCH + 1)
        with pytest.raises(ProtocolError, match="HTTP 413"):
            labeler.score_candidates(QUERY, candidates)

    def test_client_rejects_empty_candidates_before_any_request(self, base_url):
        with pytest.raises(ContractError):
            RemoteLabeler(base_url).score_candidates(QUERY, [])
