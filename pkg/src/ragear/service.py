"""HTTP service exposing the recommendation pipeline.

Stateless request handling over an immutable (store, index) snapshot;
the snapshot can be swapped atomically for a hot reload. The web UI is
a pure client of these endpoints.
"""

from __future__ import annotations

import logging
import time
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .embed import EmbedError
from .kg import ConstraintSet, NotFoundError, UnknownConstraintError
from .pipeline import METHODS, Pipeline

log = logging.getLogger("ragear.service")


class ConstraintsModel(BaseModel):
    plan_id: Optional[str] = None
    max_credits: Optional[int] = Field(default=None, ge=1)
    min_credits: Optional[int] = Field(default=None, ge=1)
    discipline: Optional[str] = None
    require_prerequisites_met: bool = False
    completed_course_ids: list[str] = Field(default_factory=list)


class RecommendRequestModel(BaseModel):
    query: str
    constraints: Optional[ConstraintsModel] = None
    method: str = "ragear"
    top_n: int = Field(default=3, ge=1, le=50)
    t_q: Optional[int] = Field(default=None, ge=1)


def create_app(pipeline: Optional[Pipeline] = None) -> FastAPI:
    app = FastAPI(title="ragear", version="0.1.0")
    app.state.pipeline = pipeline
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def current() -> Pipeline:
        p = app.state.pipeline
        if p is None:
            raise HTTPException(status_code=503, detail="index not loaded")
        return p

    @app.post("/api/recommend")
    def recommend(req: RecommendRequestModel, request: Request):
        start = time.perf_counter()
        p = current()
        if not req.query.strip():
            raise HTTPException(status_code=400, detail="query must be non-empty")
        if req.method not in METHODS:
            raise HTTPException(
                status_code=400, detail=f"method must be one of {METHODS}"
            )
        constraints = None
        if req.constraints is not None:
            try:
                constraints = ConstraintSet(
                    plan_id=req.constraints.plan_id,
                    max_credits=req.constraints.max_credits,
                    min_credits=req.constraints.min_credits,
                    discipline=req.constraints.discipline,
                    require_prerequisites_met=req.constraints.require_prerequisites_met,
                    completed_course_ids=set(req.constraints.completed_course_ids),
                )
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        all_evidence = request.query_params.get("all_evidence") == "true"
        try:
            result = p.recommend(
                req.query,
                method=req.method,
                constraints=constraints,
                top_n=req.top_n,
                t_q=req.t_q,
                max_chunks=None if all_evidence else 5,
            )
        except UnknownConstraintError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except EmbedError as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        payload = {
            "query": result.query,
            "method": result.method,
            "t_q": result.t_q,
            "k": result.k,
            "candidate_count": result.candidate_count,
            "note": result.note,
            "elapsed_ms": result.elapsed_ms,
            "courses": [
                {
                    "course_id": c.course_id,
                    "title": c.title,
                    "instructor": c.instructor,
                    "credits": c.credits,
                    "description": c.description,
                    "score": c.score,
                    "components": (
                        {
                            "global_evidence": c.components.global_evidence,
                            "ranked_evidence": c.components.ranked_evidence,
                            "lesson_coverage": c.components.lesson_coverage,
                            "rs": c.components.rs,
                        }
                        if c.components
                        else None
                    ),
                    "supporting_chunks": c.supporting_chunks,
                }
                for c in result.courses
            ],
        }
        log.info(
            '{"path": "/api/recommend", "method": %r, "latency_ms": %.2f, '
            '"candidates": %d, "results": %d}',
            req.method,
            (time.perf_counter() - start) * 1000.0,
            result.candidate_count,
            len(result.courses),
        )
        return JSONResponse(payload)

    @app.get("/api/courses")
    def list_courses():
        p = current()
        return {
            "courses": [
                {
                    "course_id": c.course_id,
                    "title": c.title,
                    "credits": c.credits,
                    "discipline": c.discipline,
                }
                for c in sorted(p.store.courses.values(), key=lambda c: c.course_id)
            ]
        }

    @app.get("/api/courses/{course_id}")
    def course_detail(course_id: str):
        p = current()
        try:
            course = p.store.courses[course_id]
            lessons = p.store.lessons_of(course_id)
        except (KeyError, NotFoundError):
            raise HTTPException(status_code=404, detail=f"unknown course {course_id}")
        return {
            "course_id": course.course_id,
            "title": course.title,
            "description": course.description,
            "instructor": course.instructor,
            "credits": course.credits,
            "discipline": course.discipline,
            "prerequisite_ids": sorted(course.prerequisite_ids),
            "lessons": [
                {"lesson_id": l.lesson_id, "index": l.index, "title": l.title}
                for l in lessons
            ],
        }

    @app.get("/api/health")
    def health():
        p = app.state.pipeline
        if p is None:
            return JSONResponse({"status": "loading"}, status_code=503)
        return {
            "status": "ok",
            "courses": len(p.store.courses),
            "lessons": len(p.store.lessons),
            "chunks": len(p.store.chunks),
            "indexed": len(p.index),
        }

    @app.get("/api/config")
    def config():
        p = current()
        return {
            "k": p.k,
            "t_q_policy": "distinct content tokens, clamped to [1, 10]",
            "embedder_kind": p.embedder.config.kind,
            "methods": list(METHODS),
            "disciplines": sorted(p.store.disciplines),
            "study_plans": sorted(p.store.study_plans),
        }

    return app


def mount_static(app: FastAPI, static_dir: str):
    app.mount("/", StaticFiles(directory=static_dir, html=True), name="webui")
