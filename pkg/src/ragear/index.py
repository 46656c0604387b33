"""Dense chunk index with exact top-k retrieval.

Brute-force cosine scan over a contiguous float32 matrix. The index is
immutable after build; retrieval restricts the scan to a candidate
course set and returns the evidence set with deterministic tie-breaks
(score descending, chunk_id ascending). Negative similarities are
clamped to zero and clamped-zero chunks never enter the evidence set.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embed import normalize
from .kg import KGStore

MAGIC = b"RGEIDX1"
DEFAULT_K = 200


class IndexError_(Exception):
    pass


@dataclass(frozen=True)
class RetrievedChunk:
    chunk_id: str
    course_id: str
    lesson_id: str
    score: float
    rank: int


@dataclass
class EvidenceSet:
    query_id: str
    k: int
    items: list[RetrievedChunk] = field(default_factory=list)

    def by_course(self) -> dict[str, list[RetrievedChunk]]:
        grouped: dict[str, list[RetrievedChunk]] = {}
        for item in self.items:
            grouped.setdefault(item.course_id, []).append(item)
        return grouped

    def total_similarity(self) -> float:
        return sum(item.score for item in self.items)


class DenseIndex:
    def __init__(
        self,
        chunk_ids: list[str],
        course_ids: list[str],
        lesson_ids: list[str],
        matrix: np.ndarray,
    ):
        self.chunk_ids = chunk_ids
        self.course_ids = course_ids
        self.lesson_ids = lesson_ids
        self.matrix = np.ascontiguousarray(matrix, dtype=np.float32)
        if course_ids:
            uniques, codes = np.unique(np.asarray(course_ids), return_inverse=True)
        else:
            uniques, codes = np.asarray([]), np.asarray([], dtype=np.intp)
        self._course_uniques = uniques
        self._course_codes = codes

    def candidate_mask(self, candidates: set[str]) -> np.ndarray:
        """Boolean row mask for chunks whose course is in candidates."""
        wanted = [
            code
            for code, cid in enumerate(self._course_uniques)
            if cid in candidates
        ]
        return np.isin(self._course_codes, wanted)

    def __len__(self) -> int:
        return len(self.chunk_ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1] if self.matrix.size else 0


def build_index(
    chunk_embeddings: list[tuple[str, np.ndarray]],
    store: KGStore,
) -> DenseIndex:
    """Assemble the scan matrix; every chunk id must resolve in the store."""
    if not chunk_embeddings:
        return DenseIndex([], [], [], np.zeros((0, 0), dtype=np.float32))
    dim = len(chunk_embeddings[0][1])
    chunk_ids, course_ids, lesson_ids, rows = [], [], [], []
    seen: set[str] = set()
    for chunk_id, vec in chunk_embeddings:
        if chunk_id in seen:
            raise IndexError_(f"duplicate chunk_id: {chunk_id}")
        seen.add(chunk_id)
        chunk, lesson, course = store.resolve_chunk(chunk_id)
        vec = np.asarray(vec, dtype=np.float32)
        if vec.shape != (dim,):
            raise IndexError_(
                f"{chunk_id}: dim {vec.shape[0] if vec.ndim == 1 else vec.shape} != {dim}"
            )
        chunk_ids.append(chunk_id)
        course_ids.append(course.course_id)
        lesson_ids.append(lesson.lesson_id)
        rows.append(normalize(vec))
    return DenseIndex(chunk_ids, course_ids, lesson_ids, np.vstack(rows))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise IndexError_(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def retrieve(
    index: DenseIndex,
    query_emb: np.ndarray,
    candidates: set[str],
    k: int = DEFAULT_K,
    query_id: str = "",
) -> EvidenceSet:
    """Exact top-k over chunks of candidate courses, clamped to [0, 1]."""
    if k < 1:
        raise IndexError_("k must be >= 1")
    if len(index) == 0 or not candidates:
        return EvidenceSet(query_id=query_id, k=k)
    q = normalize(np.asarray(query_emb, dtype=np.float32))
    if q.shape != (index.dim,):
        raise IndexError_(f"query dim {q.shape} != index dim {index.dim}")

    mask = index.candidate_mask(candidates)
    if not mask.any():
        return EvidenceSet(query_id=query_id, k=k)
    # one full-matrix pass; a per-candidate row gather costs more than it saves
    all_scores = index.matrix @ q
    keep = mask & (all_scores > 0.0)
    positions = np.nonzero(keep)[0]
    if positions.size == 0:
        return EvidenceSet(query_id=query_id, k=k)
    scores = all_scores[positions]

    # Preselect by score, then widen to every score tied with the cut so the
    # chunk_id tie-break is exact.
    if positions.size > k:
        part = np.argpartition(-scores, k - 1)[:k]
        threshold = scores[part].min()
        sel = np.nonzero(scores >= threshold)[0]
    else:
        sel = np.arange(positions.size)

    ranked = sorted(
        ((float(scores[i]), index.chunk_ids[positions[i]], positions[i]) for i in sel),
        key=lambda t: (-t[0], t[1]),
    )[:k]

    items = [
        RetrievedChunk(
            chunk_id=chunk_id,
            course_id=index.course_ids[pos],
            lesson_id=index.lesson_ids[pos],
            score=min(score, 1.0),
            rank=rank,
        )
        for rank, (score, chunk_id, pos) in enumerate(ranked, start=1)
    ]
    return EvidenceSet(query_id=query_id, k=k, items=items)


# -- optional binary serialization ---------------------------------------


def save_index(index: DenseIndex, path: str | Path):
    with open(path, "wb") as out:
        out.write(MAGIC)
        out.write(struct.pack("<II", index.dim, len(index)))
        for chunk_id, course_id, lesson_id in zip(
            index.chunk_ids, index.course_ids, index.lesson_ids
        ):
            for s in (chunk_id, course_id, lesson_id):
                raw = s.encode("utf-8")
                out.write(struct.pack("<H", len(raw)))
                out.write(raw)
        out.write(index.matrix.astype("<f4").tobytes())


def load_index(path: str | Path) -> DenseIndex:
    data = Path(path).read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise IndexError_(f"{path}: bad magic bytes")
    off = len(MAGIC)
    dim, count = struct.unpack_from("<II", data, off)
    off += 8
    chunk_ids, course_ids, lesson_ids = [], [], []
    for _ in range(count):
        triple = []
        for _ in range(3):
            (n,) = struct.unpack_from("<H", data, off)
            off += 2
            triple.append(data[off : off + n].decode("utf-8"))
            off += n
        chunk_ids.append(triple[0])
        course_ids.append(triple[1])
        lesson_ids.append(triple[2])
    matrix = np.frombuffer(data, dtype="<f4", offset=off, count=count * dim)
    matrix = matrix.reshape(count, dim).copy()
    return DenseIndex(chunk_ids, course_ids, lesson_ids, matrix)
