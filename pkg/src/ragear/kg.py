"""In-memory property graph over the academic catalogue.

Holds courses, lessons, transcript chunks, study plans and students,
validates referential integrity at load time, and answers the containment
and constraint queries the scorer and service rely on. The store is
immutable after load; reloading builds a fresh instance.
"""

from __future__ import annotations

import graphlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional


class CatalogueError(Exception):
    """Base class for catalogue loading/query failures."""


class CatalogueParseError(CatalogueError):
    """The catalogue file is not valid JSON or misses required fields."""


class IntegrityError(CatalogueError):
    """A referential invariant is violated (dangling id, cycle, overlap...)."""


class NotFoundError(CatalogueError):
    """Lookup of an unknown entity id."""


class UnknownConstraintError(CatalogueError):
    """A constraint references a plan or discipline absent from the catalogue."""


@dataclass(frozen=True)
class Course:
    course_id: str
    title: str
    description: str
    instructor: str
    credits: int
    discipline: str
    prerequisite_ids: frozenset[str]
    lesson_ids: tuple[str, ...]


@dataclass(frozen=True)
class Lesson:
    lesson_id: str
    course_id: str
    index: int
    title: str
    duration_s: Optional[float] = None


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    lesson_id: str
    course_id: str
    index: int
    text: str
    start_s: float
    end_s: float


@dataclass(frozen=True)
class StudyPlan:
    plan_id: str
    name: str
    course_ids: frozenset[str]


@dataclass(frozen=True)
class Student:
    student_id: str
    plan_id: str
    completed_course_ids: frozenset[str]


@dataclass
class ConstraintSet:
    """Conjunctive symbolic filters over the course catalogue."""

    plan_id: Optional[str] = None
    max_credits: Optional[int] = None
    min_credits: Optional[int] = None
    discipline: Optional[str] = None
    require_prerequisites_met: bool = False
    completed_course_ids: set[str] = field(default_factory=set)

    def __post_init__(self):
        if (
            self.min_credits is not None
            and self.max_credits is not None
            and self.min_credits > self.max_credits
        ):
            raise ValueError("min_credits must not exceed max_credits")

    @classmethod
    def from_dict(cls, data: dict) -> "ConstraintSet":
        allowed = {
            "plan_id",
            "max_credits",
            "min_credits",
            "discipline",
            "require_prerequisites_met",
            "completed_course_ids",
        }
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown constraint fields: {sorted(unknown)}")
        kwargs = dict(data)
        if "completed_course_ids" in kwargs:
            kwargs["completed_course_ids"] = set(kwargs["completed_course_ids"])
        return cls(**kwargs)

    def merged(self, other: "ConstraintSet") -> "ConstraintSet":
        """Field-wise conjunction of two constraint sets."""

        def pick(a, b, combine):
            if a is None:
                return b
            if b is None:
                return a
            return combine(a, b)

        if self.plan_id and other.plan_id and self.plan_id != other.plan_id:
            raise ValueError("conflicting plan_id constraints")
        if self.discipline and other.discipline and self.discipline != other.discipline:
            raise ValueError("conflicting discipline constraints")
        return ConstraintSet(
            plan_id=self.plan_id or other.plan_id,
            max_credits=pick(self.max_credits, other.max_credits, min),
            min_credits=pick(self.min_credits, other.min_credits, max),
            discipline=self.discipline or other.discipline,
            require_prerequisites_met=(
                self.require_prerequisites_met or other.require_prerequisites_met
            ),
            completed_course_ids=self._merged_completed(other),
        )

    def _merged_completed(self, other: "ConstraintSet") -> set[str]:
        # Intersection semantics: a course passes the merged prerequisite
        # check iff it passes both originals.
        if self.require_prerequisites_met and other.require_prerequisites_met:
            return self.completed_course_ids & other.completed_course_ids
        if self.require_prerequisites_met:
            return set(self.completed_course_ids)
        if other.require_prerequisites_met:
            return set(other.completed_course_ids)
        return self.completed_course_ids | other.completed_course_ids


class KGStore:
    """Immutable catalogue store with O(1) containment resolution."""

    def __init__(
        self,
        courses: dict[str, Course],
        lessons: dict[str, Lesson],
        chunks: dict[str, Chunk],
        study_plans: dict[str, StudyPlan],
        students: dict[str, Student],
    ):
        self.courses = courses
        self.lessons = lessons
        self.chunks = chunks
        self.study_plans = study_plans
        self.students = students
        self._chunks_by_lesson: dict[str, list[Chunk]] = {
            lid: [] for lid in lessons
        }
        for chunk in chunks.values():
            self._chunks_by_lesson[chunk.lesson_id].append(chunk)
        for lst in self._chunks_by_lesson.values():
            lst.sort(key=lambda c: c.index)
        self.disciplines = {c.discipline for c in courses.values()}

    # -- containment traversal -------------------------------------------

    def lessons_of(self, course_id: str) -> list[Lesson]:
        course = self.courses.get(course_id)
        if course is None:
            raise NotFoundError(f"unknown course: {course_id}")
        return [self.lessons[lid] for lid in course.lesson_ids]

    def chunks_of(self, lesson_id: str) -> list[Chunk]:
        if lesson_id not in self.lessons:
            raise NotFoundError(f"unknown lesson: {lesson_id}")
        return list(self._chunks_by_lesson[lesson_id])

    def resolve_chunk(self, chunk_id: str) -> tuple[Chunk, Lesson, Course]:
        chunk = self.chunks.get(chunk_id)
        if chunk is None:
            raise NotFoundError(f"unknown chunk: {chunk_id}")
        lesson = self.lessons[chunk.lesson_id]
        return chunk, lesson, self.courses[lesson.course_id]

    # -- symbolic filtering ----------------------------------------------

    def filter_candidates(self, constraints: ConstraintSet) -> set[str]:
        """Course ids satisfying every present constraint (conjunctive)."""
        if constraints.plan_id is not None:
            plan = self.study_plans.get(constraints.plan_id)
            if plan is None:
                raise UnknownConstraintError(
                    f"unknown study plan: {constraints.plan_id}"
                )
            pool: Iterable[Course] = (self.courses[cid] for cid in plan.course_ids)
        else:
            pool = self.courses.values()
        if (
            constraints.discipline is not None
            and constraints.discipline not in self.disciplines
        ):
            raise UnknownConstraintError(
                f"unknown discipline: {constraints.discipline}"
            )

        result = set()
        for course in pool:
            if constraints.max_credits is not None and course.credits > constraints.max_credits:
                continue
            if constraints.min_credits is not None and course.credits < constraints.min_credits:
                continue
            if constraints.discipline is not None and course.discipline != constraints.discipline:
                continue
            if constraints.require_prerequisites_met and not (
                course.prerequisite_ids <= constraints.completed_course_ids
            ):
                continue
            result.add(course.course_id)
        return result

    # -- serialization ----------------------------------------------------

    def to_catalogue_dict(self) -> dict:
        return {
            "courses": [
                {
                    "course_id": c.course_id,
                    "title": c.title,
                    "description": c.description,
                    "instructor": c.instructor,
                    "credits": c.credits,
                    "discipline": c.discipline,
                    "prerequisite_ids": sorted(c.prerequisite_ids),
                    "lesson_ids": list(c.lesson_ids),
                }
                for c in sorted(self.courses.values(), key=lambda c: c.course_id)
            ],
            "lessons": [
                {
                    "lesson_id": l.lesson_id,
                    "course_id": l.course_id,
                    "index": l.index,
                    "title": l.title,
                    "duration_s": l.duration_s,
                }
                for l in sorted(self.lessons.values(), key=lambda l: l.lesson_id)
            ],
            "chunks": [
                {
                    "chunk_id": ch.chunk_id,
                    "lesson_id": ch.lesson_id,
                    "course_id": ch.course_id,
                    "index": ch.index,
                    "text": ch.text,
                    "start_s": ch.start_s,
                    "end_s": ch.end_s,
                }
                for ch in sorted(self.chunks.values(), key=lambda ch: ch.chunk_id)
            ],
            "study_plans": [
                {
                    "plan_id": p.plan_id,
                    "name": p.name,
                    "course_ids": sorted(p.course_ids),
                }
                for p in sorted(self.study_plans.values(), key=lambda p: p.plan_id)
            ],
            "students": [
                {
                    "student_id": s.student_id,
                    "plan_id": s.plan_id,
                    "completed_course_ids": sorted(s.completed_course_ids),
                }
                for s in sorted(self.students.values(), key=lambda s: s.student_id)
            ],
        }


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise CatalogueParseError(f"{where}: missing field {key!r}")
    return obj[key]


def load_catalogue(
    catalogue_file: str | Path,
    chunks_file: Optional[str | Path] = None,
) -> KGStore:
    """Load and validate a catalogue JSON file.

    `chunks_file` optionally supplies the chunk array as a JSONL file
    (one chunk object per line, as emitted by the ingest pipeline),
    overriding or complementing the catalogue's own `chunks` array.
    """
    path = Path(catalogue_file)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CatalogueParseError(f"cannot read catalogue {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise CatalogueParseError("catalogue root must be a JSON object")

    chunk_rows = list(raw.get("chunks", []))
    if chunks_file is not None:
        for line_no, line in enumerate(
            Path(chunks_file).read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            try:
                chunk_rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CatalogueParseError(
                    f"{chunks_file}:{line_no}: malformed chunk line: {exc}"
                ) from exc

    return build_store(
        courses=raw.get("courses", []),
        lessons=raw.get("lessons", []),
        chunks=chunk_rows,
        study_plans=raw.get("study_plans", []),
        students=raw.get("students", []),
    )


def build_store(courses, lessons, chunks, study_plans=(), students=()) -> KGStore:
    """Validate raw catalogue rows and assemble a linked store."""
    course_map: dict[str, Course] = {}
    for row in courses:
        cid = _require(row, "course_id", "course")
        if cid in course_map:
            raise IntegrityError(f"duplicate course_id: {cid}")
        credits = _require(row, "credits", f"course {cid}")
        if not isinstance(credits, int) or credits < 1:
            raise IntegrityError(f"course {cid}: credits must be a positive integer")
        prereqs = frozenset(row.get("prerequisite_ids", ()))
        if cid in prereqs:
            raise IntegrityError(f"course {cid} lists itself as a prerequisite")
        course_map[cid] = Course(
            course_id=cid,
            title=_require(row, "title", f"course {cid}"),
            description=row.get("description", ""),
            instructor=row.get("instructor", ""),
            credits=credits,
            discipline=_require(row, "discipline", f"course {cid}"),
            prerequisite_ids=prereqs,
            lesson_ids=tuple(row.get("lesson_ids", ())),
        )

    for course in course_map.values():
        for pid in course.prerequisite_ids:
            if pid not in course_map:
                raise IntegrityError(
                    f"course {course.course_id}: unknown prerequisite {pid}"
                )
    ts = graphlib.TopologicalSorter(
        {cid: c.prerequisite_ids for cid, c in course_map.items()}
    )
    try:
        ts.prepare()
    except graphlib.CycleError as exc:
        raise IntegrityError(f"cyclic prerequisites: {exc.args[1]}") from exc

    lesson_map: dict[str, Lesson] = {}
    for row in lessons:
        lid = _require(row, "lesson_id", "lesson")
        if lid in lesson_map:
            raise IntegrityError(f"duplicate lesson_id: {lid}")
        cid = _require(row, "course_id", f"lesson {lid}")
        if cid not in course_map:
            raise IntegrityError(f"lesson {lid}: unknown course {cid}")
        lesson_map[lid] = Lesson(
            lesson_id=lid,
            course_id=cid,
            index=_require(row, "index", f"lesson {lid}"),
            title=row.get("title", ""),
            duration_s=row.get("duration_s"),
        )

    for course in course_map.values():
        indices = []
        for lid in course.lesson_ids:
            lesson = lesson_map.get(lid)
            if lesson is None:
                raise IntegrityError(
                    f"course {course.course_id}: unknown lesson {lid}"
                )
            if lesson.course_id != course.course_id:
                raise IntegrityError(
                    f"lesson {lid} is owned by {lesson.course_id}, "
                    f"listed under {course.course_id}"
                )
            indices.append(lesson.index)
        if sorted(indices) != list(range(len(indices))):
            raise IntegrityError(
                f"course {course.course_id}: lesson indices not contiguous 0..n-1"
            )
    listed = {lid for c in course_map.values() for lid in c.lesson_ids}
    for lid in lesson_map:
        if lid not in listed:
            raise IntegrityError(f"lesson {lid} not listed by its course")

    chunk_map: dict[str, Chunk] = {}
    for row in chunks:
        chid = _require(row, "chunk_id", "chunk")
        if chid in chunk_map:
            raise IntegrityError(f"duplicate chunk_id: {chid}")
        lid = _require(row, "lesson_id", f"chunk {chid}")
        lesson = lesson_map.get(lid)
        if lesson is None:
            raise IntegrityError(f"chunk {chid}: unknown lesson {lid}")
        cid = _require(row, "course_id", f"chunk {chid}")
        if cid != lesson.course_id:
            raise IntegrityError(
                f"chunk {chid}: course_id {cid} does not match "
                f"lesson {lid}'s course {lesson.course_id}"
            )
        text = _require(row, "text", f"chunk {chid}")
        if not text:
            raise IntegrityError(f"chunk {chid}: empty text")
        start_s = float(_require(row, "start_s", f"chunk {chid}"))
        end_s = float(_require(row, "end_s", f"chunk {chid}"))
        if start_s < 0 or end_s <= start_s:
            raise IntegrityError(f"chunk {chid}: invalid interval [{start_s}, {end_s})")
        chunk_map[chid] = Chunk(
            chunk_id=chid,
            lesson_id=lid,
            course_id=cid,
            index=_require(row, "index", f"chunk {chid}"),
            text=text,
            start_s=start_s,
            end_s=end_s,
        )

    by_lesson: dict[str, list[Chunk]] = {}
    for chunk in chunk_map.values():
        by_lesson.setdefault(chunk.lesson_id, []).append(chunk)
    for lid, lst in by_lesson.items():
        lst.sort(key=lambda c: c.index)
        if [c.index for c in lst] != list(range(len(lst))):
            raise IntegrityError(f"lesson {lid}: chunk indices not contiguous 0..n-1")
        for prev, cur in zip(lst, lst[1:]):
            if cur.start_s < prev.end_s:
                raise IntegrityError(
                    f"lesson {lid}: chunk {cur.chunk_id} overlaps {prev.chunk_id}"
                )

    plan_map: dict[str, StudyPlan] = {}
    for row in study_plans:
        pid = _require(row, "plan_id", "study_plan")
        if pid in plan_map:
            raise IntegrityError(f"duplicate plan_id: {pid}")
        cids = frozenset(row.get("course_ids", ()))
        for cid in cids:
            if cid not in course_map:
                raise IntegrityError(f"study plan {pid}: unknown course {cid}")
        plan_map[pid] = StudyPlan(plan_id=pid, name=row.get("name", ""), course_ids=cids)

    student_map: dict[str, Student] = {}
    for row in students:
        sid = _require(row, "student_id", "student")
        if sid in student_map:
            raise IntegrityError(f"duplicate student_id: {sid}")
        pid = _require(row, "plan_id", f"student {sid}")
        if pid not in plan_map:
            raise IntegrityError(f"student {sid}: unknown study plan {pid}")
        completed = frozenset(row.get("completed_course_ids", ()))
        for cid in completed:
            if cid not in course_map:
                raise IntegrityError(f"student {sid}: unknown completed course {cid}")
        student_map[sid] = Student(
            student_id=sid, plan_id=pid, completed_course_ids=completed
        )

    return KGStore(course_map, lesson_map, chunk_map, plan_map, student_map)
