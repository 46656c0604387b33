"""Course-level evidence aggregation.

Propagates chunk-level retrieval scores to course rankings. The main
score is the product of three components: the course's share of the
total retrieved similarity (global evidence), the rank-discounted mass
of its retrieved chunks (ranked evidence), and the spread of evidence
across its lessons (lesson coverage). Global evidence alone doubles as
the normalized SumP baseline; a metadata-only dense baseline is also
provided.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO

import numpy as np

from .index import EvidenceSet, RetrievedChunk, cosine
from .kg import KGStore, Course, NotFoundError

DEFAULT_STOPWORDS = frozenset(
    """a an and are as at be by for from how in is it of on or that the
    this to what which with i my me we our you your about want like need
    course courses""".split()
)

T_Q_MAX = 10

_TOKEN_RE = re.compile(r"[^0-9a-z]+")


@dataclass(frozen=True)
class QueryContext:
    query_id: str
    text: str
    t_q: int
    k: int

    def __post_init__(self):
        if self.t_q < 1:
            raise ValueError("t_q must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass
class CourseScore:
    course_id: str
    global_evidence: float
    ranked_evidence: float
    lesson_coverage: float
    rs: float
    supporting_chunks: list[RetrievedChunk] = field(default_factory=list)


@dataclass
class Ranking:
    query_id: str
    method: str  # metadata | sump | ragear
    items: list[tuple[str, float]] = field(default_factory=list)


def default_t_q(
    query_text: str, stopwords: frozenset[str] = DEFAULT_STOPWORDS
) -> int:
    """Distinct content tokens in the query, clamped to [1, 10]."""
    if not query_text:
        raise ValueError("empty query text")
    tokens = {t for t in _TOKEN_RE.split(query_text.lower()) if t}
    count = len(tokens - stopwords)
    return max(1, min(T_Q_MAX, count))


def global_evidence(evidence: EvidenceSet, course_id: str) -> float:
    total = evidence.total_similarity()
    if total == 0.0:
        return 0.0
    own = sum(c.score for c in evidence.items if c.course_id == course_id)
    return own / total


def ranked_evidence(
    evidence: EvidenceSet, course_id: str, ctx: QueryContext
) -> float:
    denom = sum(1.0 / (ctx.t_q + i) for i in range(1, ctx.k + 1))
    num = sum(
        1.0 / (ctx.t_q + c.rank)
        for c in evidence.items
        if c.course_id == course_id
    )
    return num / denom


def lesson_coverage(
    evidence: EvidenceSet, course_id: str, store: KGStore, ctx: QueryContext
) -> float:
    course = store.courses.get(course_id)
    if course is None:
        raise NotFoundError(f"unknown course: {course_id}")
    if not course.lesson_ids:
        raise NotFoundError(f"course {course_id} has no lessons")
    best_rank: dict[str, int] = {}
    for c in evidence.items:
        if c.course_id == course_id:
            cur = best_rank.get(c.lesson_id)
            if cur is None or c.rank < cur:
                best_rank[c.lesson_id] = c.rank
    total = sum(
        1.0 / (ctx.t_q + best_rank[lid])
        for lid in course.lesson_ids
        if lid in best_rank
    )
    return total / len(course.lesson_ids)


def ragear_score(
    evidence: EvidenceSet, course_id: str, store: KGStore, ctx: QueryContext
) -> CourseScore:
    ge = global_evidence(evidence, course_id)
    re_ = ranked_evidence(evidence, course_id, ctx)
    lc = lesson_coverage(evidence, course_id, store, ctx)
    chunks = [c for c in evidence.items if c.course_id == course_id]
    return CourseScore(
        course_id=course_id,
        global_evidence=ge,
        ranked_evidence=re_,
        lesson_coverage=lc,
        rs=ge * re_ * lc,
        supporting_chunks=chunks,
    )


def _sorted_items(scores: dict[str, float]) -> list[tuple[str, float]]:
    return sorted(
        ((cid, s) for cid, s in scores.items() if s > 0.0),
        key=lambda t: (-t[1], t[0]),
    )


def rank_courses_ragear(
    evidence: EvidenceSet, store: KGStore, ctx: QueryContext
) -> Ranking:
    scores = {
        cid: ragear_score(evidence, cid, store, ctx).rs
        for cid in evidence.by_course()
    }
    return Ranking(ctx.query_id, "ragear", _sorted_items(scores))


def rank_courses_sump(
    evidence: EvidenceSet, store: KGStore, ctx: QueryContext
) -> Ranking:
    scores = {
        cid: global_evidence(evidence, cid) for cid in evidence.by_course()
    }
    return Ranking(ctx.query_id, "sump", _sorted_items(scores))


def course_metadata_text(course: Course) -> str:
    """Fixed template embedded for the metadata-only baseline."""
    return (
        f"{course.title}. {course.description}. "
        f"{course.instructor}. {course.discipline}."
    )


def rank_courses_metadata(
    store: KGStore,
    query_emb: np.ndarray,
    candidates: set[str],
    course_embeddings: dict[str, np.ndarray],
    query_id: str = "",
) -> Ranking:
    scores: dict[str, float] = {}
    for cid in candidates:
        if cid not in course_embeddings:
            raise NotFoundError(f"no metadata embedding for course {cid}")
        scores[cid] = max(0.0, cosine(query_emb, course_embeddings[cid]))
    return Ranking(query_id, "metadata", _sorted_items(scores))


# -- run file interchange -------------------------------------------------


def write_run(out: TextIO, rankings: Sequence[Ranking]):
    """TSV run format: query_id, method, rank, course_id, score."""
    for ranking in rankings:
        for pos, (course_id, score) in enumerate(ranking.items, start=1):
            out.write(
                f"{ranking.query_id}\t{ranking.method}\t{pos}\t{course_id}\t{score:.10f}\n"
            )


def read_run(lines) -> dict[str, list[tuple[str, float]]]:
    """Parse a run file into query_id -> ordered [(course_id, score)]."""
    runs: dict[str, list[tuple[str, float]]] = {}
    for line_no, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise ValueError(f"run line {line_no}: expected 5 fields, got {len(parts)}")
        query_id, _method, rank, course_id, score = parts
        runs.setdefault(query_id, []).append((course_id, float(score)))
        if int(rank) != len(runs[query_id]):
            raise ValueError(f"run line {line_no}: rank out of sequence")
    return runs
