import functools
import json
import math

import numpy as np
import pytest

from ragear.embed import (
    EmbedError,
    EmbedderConfig,
    FileEmbedder,
    HttpEmbedder,
    TestEmbedder,
    fnv1a64,
    hash_embed,
    make_embedder,
    read_embeddings,
    tokenize,
    write_embeddings,
)


def reference_fnv1a64(token: str) -> int:
    # independent reformulation of the hash for cross-checking
    return functools.reduce(
        lambda h, b: ((h ^ b) * 1099511628211) % 2**64,
        token.encode("utf-8"),
        14695981039346656037,
    )


def cos(a, b):
    return float(np.dot(a, b))


class TestHashEmbedder:
    def test_fnv_against_reference(self):
        for token in ["data", "bases", "mining", "a", "Zx9"]:
            assert fnv1a64(token.encode()) == reference_fnv1a64(token)

    def test_deterministic(self):
        a = hash_embed("machine learning", 64)
        b = hash_embed("machine learning", 64)
        assert np.array_equal(a, b)

    def test_unit_norm(self):
        for text in ["one", "some longer text with tokens", "x y z"]:
            vec = hash_embed(text, 8)
            assert abs(np.linalg.norm(vec) - 1.0) < 1e-6

    def test_identical_texts_cosine_one(self):
        a = hash_embed("neural networks", 256)
        assert abs(cos(a, a) - 1.0) < 1e-6

    def test_disjoint_tokens_near_orthogonal(self):
        # golden values frozen from the reference hash implementation
        a = hash_embed("alpha beta gamma delta", 256)
        b = hash_embed("epsilon zeta eta theta", 256)
        assert abs(cos(a, b)) < 0.5
        assert cos(a, b) == pytest.approx(0.0, abs=1e-6)

    def test_shared_token_ordering(self):
        db = hash_embed("data bases", 256)
        dm = hash_embed("data mining", 256)
        nr = hash_embed("network routing", 256)
        assert cos(db, dm) > cos(db, nr)
        assert cos(db, dm) == pytest.approx(0.5, abs=1e-6)
        assert cos(db, nr) == pytest.approx(0.0, abs=1e-6)

    def test_tokenization(self):
        assert tokenize("Hello, World! 42-x") == ["hello", "world", "42", "x"]

    def test_dim_too_small(self):
        with pytest.raises(ValueError):
            hash_embed("x", 1)


class TestTestEmbedder:
    def test_query_equals_passage_path(self):
        emb = TestEmbedder(EmbedderConfig(kind="test", dim=32))
        q = emb.embed_query("graph theory")
        p = emb.embed_passages(["graph theory"])[0]
        assert np.array_equal(q, p)

    def test_empty_text_rejected(self):
        emb = TestEmbedder(EmbedderConfig(kind="test", dim=32))
        with pytest.raises(EmbedError):
            emb.embed_query("")
        with pytest.raises(EmbedError):
            emb.embed_passages(["ok", ""])

    def test_order_preserving(self):
        emb = TestEmbedder(EmbedderConfig(kind="test", dim=32))
        texts = ["one", "two", "three"]
        vecs = emb.embed_passages(texts)
        for t, v in zip(texts, vecs):
            assert np.array_equal(v, hash_embed(t, 32))


class TestEmbeddingFile:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        items = [(f"id{i}", hash_embed(f"text {i}", 16)) for i in range(5)]
        write_embeddings(path, 16, "passage", items)
        dim, kind, vectors = read_embeddings(path)
        assert dim == 16 and kind == "passage"
        for item_id, vec in items:
            assert np.allclose(vectors[item_id], vec, atol=1e-7)

    def test_file_embedder_lookup(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        write_embeddings(path, 8, "passage", [("c1", hash_embed("hello", 8))])
        emb = FileEmbedder(EmbedderConfig(kind="file", dim=8, path=str(path)))
        vec = emb.lookup("c1")
        assert abs(np.linalg.norm(vec) - 1.0) < 1e-6
        with pytest.raises(EmbedError):
            emb.lookup("missing")

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        lines = [
            json.dumps({"dim": 4, "kind": "x"}),
            json.dumps({"id": "a", "vector": [1, 0, 0, 0]}),
            json.dumps({"id": "a", "vector": [0, 1, 0, 0]}),
        ]
        path.write_text("\n".join(lines))
        with pytest.raises(EmbedError, match="duplicate"):
            read_embeddings(path)

    def test_dim_mismatch_rejected(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        lines = [
            json.dumps({"dim": 4, "kind": "x"}),
            json.dumps({"id": "a", "vector": [1, 0]}),
        ]
        path.write_text("\n".join(lines))
        with pytest.raises(EmbedError, match="dim"):
            read_embeddings(path)


class FakeResponse:
    def __init__(self, status_code=200, payload=None):
        self.status_code = status_code
        self._payload = payload or {}

    def raise_for_status(self):
        if self.status_code >= 400:
            import requests

            raise requests.HTTPError(f"{self.status_code}")

    def json(self):
        return self._payload


class FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append(json)
        resp = self.responses.pop(0)
        if isinstance(resp, Exception):
            raise resp
        return resp


class TestHttpEmbedder:
    def config(self, **kw):
        return EmbedderConfig(
            kind="http", dim=4, endpoint_url="http://emb.test/v1", max_batch=2, **kw
        )

    def test_batching_and_prefix(self):
        ok = lambda n: FakeResponse(
            payload={"embeddings": [[1, 0, 0, 0]] * n}
        )
        session = FakeSession([ok(2), ok(1)])
        emb = HttpEmbedder(self.config(), session=session)
        vecs = emb.embed_passages(["a", "b", "c"])
        assert len(vecs) == 3
        assert len(session.calls) == 2
        assert session.calls[0]["prefix"] == "passage: "

    def test_query_prefix(self):
        session = FakeSession([FakeResponse(payload={"embeddings": [[0, 1, 0, 0]]})])
        emb = HttpEmbedder(self.config(), session=session)
        emb.embed_query("hello")
        assert session.calls[0]["prefix"] == "query: "

    def test_retry_then_success(self):
        import requests

        session = FakeSession(
            [
                requests.ConnectionError("down"),
                FakeResponse(status_code=503),
                FakeResponse(payload={"embeddings": [[1, 1, 0, 0]]}),
            ]
        )
        emb = HttpEmbedder(self.config(), session=session)
        vec = emb.embed_query("hello")
        assert abs(np.linalg.norm(vec) - 1.0) < 1e-6
        assert len(session.calls) == 3

    def test_unreachable_after_three_attempts(self):
        import requests

        session = FakeSession([requests.ConnectionError("down")] * 3)
        emb = HttpEmbedder(self.config(), session=session)
        with pytest.raises(EmbedError, match="3 attempts"):
            emb.embed_query("hello")
        assert len(session.calls) == 3

    def test_dimension_mismatch(self):
        session = FakeSession(
            [FakeResponse(payload={"embeddings": [[1, 0]]})] * 3
        )
        emb = HttpEmbedder(self.config(), session=session)
        with pytest.raises(EmbedError):
            emb.embed_query("hello")


def test_make_embedder_dispatch(tmp_path):
    assert isinstance(make_embedder(EmbedderConfig(kind="test", dim=8)), TestEmbedder)
    path = tmp_path / "e.jsonl"
    write_embeddings(path, 8, "x", [])
    assert isinstance(
        make_embedder(EmbedderConfig(kind="file", dim=8, path=str(path))), FileEmbedder
    )
    assert isinstance(
        make_embedder(EmbedderConfig(kind="http", dim=8, endpoint_url="http://x")),
        HttpEmbedder,
    )


def test_config_validation():
    with pytest.raises(ValueError):
        EmbedderConfig(kind="http", dim=8)
    with pytest.raises(ValueError):
        EmbedderConfig(kind="nope", dim=8)
    with pytest.raises(ValueError):
        EmbedderConfig(kind="test", dim=1)
