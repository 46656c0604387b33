"""End-to-end recommendation pipeline shared by the CLI and the service.

Bundles the immutable (store, index, embedder) snapshot and runs
filter -> embed -> retrieve -> rank -> assemble for a single query.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import scoring
from .embed import EmbedderConfig, make_embedder, read_embeddings
from .index import DEFAULT_K, DenseIndex, EvidenceSet, build_index, retrieve
from .kg import ConstraintSet, KGStore, load_catalogue
from .scoring import (
    CourseScore,
    QueryContext,
    Ranking,
    default_t_q,
    ragear_score,
    rank_courses_metadata,
    rank_courses_ragear,
    rank_courses_sump,
)

METHODS = ("ragear", "sump", "metadata")


@dataclass
class PipelineConfig:
    catalogue: str
    chunks: Optional[str] = None
    embeddings: Optional[str] = None
    metadata_embeddings: Optional[str] = None
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    k: int = DEFAULT_K
    stopwords: Optional[list[str]] = None
    host: str = "127.0.0.1"
    port: int = 8080
    cors_origins: list[str] = field(default_factory=lambda: ["*"])
    static_dir: Optional[str] = None

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix == ".toml":
            import tomllib

            raw = tomllib.loads(text)
        else:
            raw = json.loads(text)
        embedder = EmbedderConfig(**raw.pop("embedder", {}))
        return cls(embedder=embedder, **raw)


@dataclass
class CourseRecommendation:
    course_id: str
    title: str
    instructor: str
    credits: int
    description: str
    score: float
    components: Optional[CourseScore]
    supporting_chunks: list[dict]


@dataclass
class RecommendResult:
    query: str
    method: str
    t_q: int
    k: int
    candidate_count: int
    courses: list[CourseRecommendation]
    note: str = ""
    elapsed_ms: float = 0.0


class Pipeline:
    def __init__(
        self,
        store: KGStore,
        index: DenseIndex,
        embedder,
        k: int = DEFAULT_K,
        stopwords: Optional[frozenset[str]] = None,
        metadata_embeddings: Optional[dict[str, np.ndarray]] = None,
    ):
        self.store = store
        self.index = index
        self.embedder = embedder
        self.k = k
        self.stopwords = stopwords or scoring.DEFAULT_STOPWORDS
        self.metadata_embeddings = metadata_embeddings

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "Pipeline":
        store = load_catalogue(config.catalogue, config.chunks)
        embedder = make_embedder(config.embedder)
        if config.embeddings:
            _, _, vectors = read_embeddings(config.embeddings)
            chunk_embs = [(cid, vec) for cid, vec in sorted(vectors.items())]
        else:
            # Embed chunk texts in-process (test embedder only in practice).
            chunk_ids = sorted(store.chunks)
            texts = [store.chunks[cid].text for cid in chunk_ids]
            chunk_embs = list(zip(chunk_ids, embedder.embed_passages(texts)))
        dense_index = build_index(chunk_embs, store)
        metadata_embs = None
        if config.metadata_embeddings:
            _, _, metadata_embs = read_embeddings(config.metadata_embeddings)
        elif hasattr(embedder, "embed_passages"):
            course_ids = sorted(store.courses)
            texts = [
                scoring.course_metadata_text(store.courses[cid])
                for cid in course_ids
            ]
            try:
                metadata_embs = dict(zip(course_ids, embedder.embed_passages(texts)))
            except Exception:
                metadata_embs = None
        stop = frozenset(config.stopwords) if config.stopwords else None
        return cls(
            store,
            dense_index,
            embedder,
            k=config.k,
            stopwords=stop,
            metadata_embeddings=metadata_embs,
        )

    def rank(
        self,
        query_text: str,
        method: str = "ragear",
        constraints: Optional[ConstraintSet] = None,
        t_q: Optional[int] = None,
        k: Optional[int] = None,
        query_id: str = "q",
    ) -> tuple[Ranking, EvidenceSet, QueryContext, set[str]]:
        if method not in METHODS:
            raise ValueError(f"unknown method: {method}")
        candidates = self.store.filter_candidates(constraints or ConstraintSet())
        k = k or self.k
        ctx = QueryContext(
            query_id=query_id,
            text=query_text,
            t_q=t_q or default_t_q(query_text, self.stopwords),
            k=k,
        )
        query_emb = self.embedder.embed_query(query_text)
        evidence = retrieve(self.index, query_emb, candidates, k, query_id)
        if method == "ragear":
            ranking = rank_courses_ragear(evidence, self.store, ctx)
        elif method == "sump":
            ranking = rank_courses_sump(evidence, self.store, ctx)
        else:
            if self.metadata_embeddings is None:
                raise ValueError("metadata embeddings not configured")
            ranking = rank_courses_metadata(
                self.store, query_emb, candidates, self.metadata_embeddings, query_id
            )
        return ranking, evidence, ctx, candidates

    def recommend(
        self,
        query_text: str,
        method: str = "ragear",
        constraints: Optional[ConstraintSet] = None,
        top_n: int = 3,
        t_q: Optional[int] = None,
        max_chunks: Optional[int] = 5,
    ) -> RecommendResult:
        start = time.perf_counter()
        ranking, evidence, ctx, candidates = self.rank(
            query_text, method, constraints, t_q
        )
        courses = []
        for course_id, score in ranking.items[:top_n]:
            course = self.store.courses[course_id]
            components = None
            if method == "ragear":
                components = ragear_score(evidence, course_id, self.store, ctx)
            supporting = [
                c for c in evidence.items if c.course_id == course_id
            ]
            if max_chunks is not None:
                supporting = supporting[:max_chunks]
            chunk_payload = []
            for rc in supporting:
                chunk, lesson, _ = self.store.resolve_chunk(rc.chunk_id)
                chunk_payload.append(
                    {
                        "chunk_id": rc.chunk_id,
                        "lesson_title": lesson.title,
                        "text": chunk.text,
                        "start_s": chunk.start_s,
                        "end_s": chunk.end_s,
                        "similarity": rc.score,
                        "rank": rc.rank,
                    }
                )
            courses.append(
                CourseRecommendation(
                    course_id=course_id,
                    title=course.title,
                    instructor=course.instructor,
                    credits=course.credits,
                    description=course.description,
                    score=score,
                    components=components,
                    supporting_chunks=chunk_payload,
                )
            )
        note = ""
        if not candidates:
            note = "no courses match the given constraints"
        elif not courses:
            note = "no course has retrieval evidence for this query"
        return RecommendResult(
            query=query_text,
            method=method,
            t_q=ctx.t_q,
            k=ctx.k,
            candidate_count=len(candidates),
            courses=courses,
            note=note,
            elapsed_ms=(time.perf_counter() - start) * 1000.0,
        )
