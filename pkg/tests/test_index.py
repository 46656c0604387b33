import math
import random

import numpy as np
import pytest

from conftest import make_store
from naive_ref import naive_retrieve
from ragear.embed import hash_embed
from ragear.index import (
    DenseIndex,
    IndexError_,
    build_index,
    cosine,
    load_index,
    retrieve,
    save_index,
)


def store_embeddings(store, dim=32):
    return [
        (cid, hash_embed(store.chunks[cid].text, dim)) for cid in sorted(store.chunks)
    ]


class TestCosine:
    def test_identity(self):
        v = hash_embed("some text", 16)
        assert cosine(v, v) == pytest.approx(1.0, abs=1e-6)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_45_degrees(self):
        s = math.sqrt(2) / 2
        assert cosine(np.array([1.0, 0.0]), np.array([s, s])) == pytest.approx(
            0.7071, abs=1e-4
        )

    def test_dim_mismatch(self):
        with pytest.raises(IndexError_):
            cosine(np.zeros(3), np.zeros(4))


class TestBuildIndex:
    def test_size_preserved(self):
        store = make_store(2, 2, 3)
        index = build_index(store_embeddings(store), store)
        assert len(index) == len(store.chunks)

    def test_duplicate_chunk_id(self):
        store = make_store(1, 1, 2)
        embs = store_embeddings(store)
        with pytest.raises(IndexError_, match="duplicate"):
            build_index(embs + embs[:1], store)

    def test_unknown_chunk_id(self):
        store = make_store(1, 1, 1)
        with pytest.raises(Exception):
            build_index([("ghost", hash_embed("x", 8))], store)

    def test_dim_mismatch(self):
        store = make_store(1, 1, 2)
        ids = sorted(store.chunks)
        with pytest.raises(IndexError_):
            build_index(
                [(ids[0], hash_embed("a", 8)), (ids[1], hash_embed("b", 16))], store
            )

    def test_empty_index(self):
        store = make_store(1, 1, 0)
        index = build_index([], store)
        result = retrieve(index, hash_embed("anything", 8), {"C00"}, k=5)
        assert result.items == []


class TestRetrieve:
    def test_empty_candidates(self):
        store = make_store(2, 1, 2)
        index = build_index(store_embeddings(store), store)
        result = retrieve(index, hash_embed("query", 32), set(), k=5)
        assert result.items == []

    def test_exact_text_match_rank_one(self):
        store = make_store(2, 2, 3)
        index = build_index(store_embeddings(store), store)
        target = sorted(store.chunks)[0]
        q = hash_embed(store.chunks[target].text, 32)
        result = retrieve(index, q, set(store.courses), k=5)
        assert result.items[0].chunk_id == target
        assert result.items[0].score == pytest.approx(1.0, abs=1e-6)

    def test_tiebreak_and_clamping(self):
        store = make_store(1, 1, 5)
        ids = sorted(store.chunks)
        # hand-built vectors giving scores {0.9, 0.8, 0.8, 0.2, -0.1} vs e1
        rows = [
            [0.9, math.sqrt(1 - 0.81)],
            [0.8, math.sqrt(1 - 0.64)],
            [0.8, -math.sqrt(1 - 0.64)],
            [0.2, math.sqrt(1 - 0.04)],
            [-0.1, math.sqrt(1 - 0.01)],
        ]
        index = DenseIndex(
            ids,
            [store.chunks[c].course_id for c in ids],
            [store.chunks[c].lesson_id for c in ids],
            np.array(rows, dtype=np.float32),
        )
        q = np.array([1.0, 0.0], dtype=np.float32)
        r3 = retrieve(index, q, {"C00"}, k=3)
        assert [i.chunk_id for i in r3.items] == [ids[0], ids[1], ids[2]]
        assert [i.rank for i in r3.items] == [1, 2, 3]
        r5 = retrieve(index, q, {"C00"}, k=5)
        # the negative-similarity chunk is never returned
        assert len(r5.items) == 4
        assert ids[4] not in [i.chunk_id for i in r5.items]

    def test_scores_nonincreasing_ranks_gapless(self):
        store = make_store(3, 2, 4)
        index = build_index(store_embeddings(store), store)
        result = retrieve(index, hash_embed("chunk lecture content", 32), set(store.courses), k=10)
        assert [i.rank for i in result.items] == list(range(1, len(result.items) + 1))
        for a, b in zip(result.items, result.items[1:]):
            assert a.score >= b.score

    def test_oracle_equivalence_random(self):
        rng = random.Random(202)
        nprng = np.random.default_rng(202)
        for trial in range(30):
            store = make_store(rng.randint(1, 6), 3, 5, rng=rng)
            ids = sorted(store.chunks)
            if not ids:
                continue
            dim = 16
            # scaled one-hot rows and an exactly unit query make every dot
            # product a single float32 multiply, identical in both paths,
            # and the small scale grid creates real score ties
            matrix = np.zeros((len(ids), dim), dtype=np.float32)
            for i in range(len(ids)):
                scale = rng.choice([0.125, 0.25, 0.5, 0.75, 1.0])
                matrix[i, rng.randrange(dim)] = scale
            index = DenseIndex(
                ids,
                [store.chunks[c].course_id for c in ids],
                [store.chunks[c].lesson_id for c in ids],
                matrix,
            )
            # components +-0.25 give an exactly unit norm at dim 16, so the
            # module's re-normalization is an exact division by 1.0
            q = np.array(
                [0.25 * rng.choice([-1.0, 1.0]) for _ in range(dim)],
                dtype=np.float32,
            )
            candidates = {c for c in store.courses if rng.random() < 0.7}
            k = rng.randint(1, 12)
            result = retrieve(index, q, candidates, k=k)
            # same raw scores, independent selection logic
            raw = index.matrix @ q
            scored = [
                (cid, index.course_ids[i], index.lesson_ids[i], float(raw[i]))
                for i, cid in enumerate(ids)
            ]
            expected = naive_retrieve(scored, candidates, k)
            got = [
                (i.chunk_id, i.course_id, i.lesson_id, i.score, i.rank)
                for i in result.items
            ]
            assert got == expected

    def test_monotone_in_candidates(self):
        store = make_store(4, 2, 3)
        index = build_index(store_embeddings(store), store)
        q = hash_embed("lecture content chunk", 32)
        small = retrieve(index, q, {"C00", "C01"}, k=8)
        large = retrieve(index, q, set(store.courses), k=8)
        for rank0 in range(min(len(small.items), len(large.items))):
            assert large.items[rank0].score >= small.items[rank0].score

    def test_determinism(self):
        store = make_store(3, 2, 4)
        index = build_index(store_embeddings(store), store)
        q = hash_embed("lecture", 32)
        a = retrieve(index, q, set(store.courses), k=6)
        b = retrieve(index, q, set(store.courses), k=6)
        assert a.items == b.items


class TestSerialization:
    def test_round_trip(self, tmp_path):
        store = make_store(2, 2, 3)
        index = build_index(store_embeddings(store), store)
        path = tmp_path / "index.bin"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded.chunk_ids == index.chunk_ids
        assert loaded.course_ids == index.course_ids
        assert np.array_equal(loaded.matrix, index.matrix)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "index.bin"
        path.write_bytes(b"NOTANIDX" + b"\x00" * 16)
        with pytest.raises(IndexError_, match="magic"):
            load_index(path)
