import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ragear.index import EvidenceSet, RetrievedChunk
from ragear.kg import build_store

DATA_DIR = Path(__file__).parent / "data"


def make_catalogue_rows(n_courses, lessons_per_course, chunks_per_lesson, rng=None):
    """Deterministic synthetic catalogue rows, optionally randomized sizes."""
    courses, lessons, chunks = [], [], []
    for ci in range(n_courses):
        cid = f"C{ci:02d}"
        n_lessons = (
            lessons_per_course
            if rng is None
            else rng.randint(1, lessons_per_course)
        )
        lesson_ids = []
        for li in range(n_lessons):
            lid = f"{cid}-L{li}"
            lesson_ids.append(lid)
            lessons.append(
                {"lesson_id": lid, "course_id": cid, "index": li, "title": f"Lesson {li}"}
            )
            n_chunks = (
                chunks_per_lesson
                if rng is None
                else rng.randint(0, chunks_per_lesson)
            )
            t = 0.0
            for ki in range(n_chunks):
                chunks.append(
                    {
                        "chunk_id": f"{lid}#{ki}",
                        "lesson_id": lid,
                        "course_id": cid,
                        "index": ki,
                        "text": f"chunk {cid} {li} {ki} lecture content",
                        "start_s": t,
                        "end_s": t + 10.0,
                    }
                )
                t += 10.0
        courses.append(
            {
                "course_id": cid,
                "title": f"Course {ci}",
                "description": f"About topic {ci}",
                "instructor": f"Teacher {ci}",
                "credits": 6 + 3 * (ci % 3),
                "discipline": f"INF/{ci % 4:02d}",
                "prerequisite_ids": [f"C{ci - 1:02d}"] if ci % 3 == 2 else [],
                "lesson_ids": lesson_ids,
            }
        )
    return courses, lessons, chunks


def make_store(n_courses=3, lessons_per_course=2, chunks_per_lesson=3, rng=None):
    courses, lessons, chunks = make_catalogue_rows(
        n_courses, lessons_per_course, chunks_per_lesson, rng
    )
    plans = [
        {
            "plan_id": "plan-all",
            "name": "All courses",
            "course_ids": [c["course_id"] for c in courses],
        }
    ]
    return build_store(courses, lessons, chunks, plans)


def evidence_from_tuples(tuples, k, query_id="q"):
    """tuples: [(chunk_id, course_id, lesson_id, score, rank)]"""
    return EvidenceSet(
        query_id=query_id,
        k=k,
        items=[
            RetrievedChunk(chunk_id=c, course_id=co, lesson_id=l, score=s, rank=r)
            for c, co, l, s, r in tuples
        ],
    )


@pytest.fixture
def small_store():
    return make_store()


@pytest.fixture
def rng():
    return random.Random(12345)
