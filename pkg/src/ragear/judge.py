"""Pluggable relevance judges.

A judge assigns each (query, course) pair a graded 0-5 score following a
two-step rubric: a binary relevance gate, then a 1-5 grade for relevant
courses. Three implementations: an HTTP client for an external LLM
service, a qrels-file lookup, and an in-memory mock for tests.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence

import requests

from .metrics import read_qrels


class JudgeError(Exception):
    pass


@dataclass(frozen=True)
class Judgment:
    query_id: str
    course_id: str
    score: int

    def __post_init__(self):
        if not 0 <= self.score <= 5:
            raise ValueError(f"score {self.score} out of 0..5")


@dataclass(frozen=True)
class CourseForJudging:
    course_id: str
    title: str
    summary: str


class JudgeClient(Protocol):
    def judge(self, query_id: str, query_text: str, course: CourseForJudging) -> int:
        ...


class MockJudge:
    """Fixed (query_id, course_id) -> score table; unknown pairs score 0."""

    def __init__(self, table: dict[tuple[str, str], int]):
        self.table = table

    def judge(self, query_id: str, query_text: str, course: CourseForJudging) -> int:
        return self.table.get((query_id, course.course_id), 0)


class FileJudge:
    """Replays judgments from a qrels file."""

    def __init__(self, qrels_path: str | Path):
        with open(qrels_path, encoding="utf-8") as f:
            self.judgments = read_qrels(f)

    def judge(self, query_id: str, query_text: str, course: CourseForJudging) -> int:
        return self.judgments.get(query_id, {}).get(course.course_id, 0)


DEFAULT_PROMPT_TEMPLATE = (
    "You are rating how well a university course matches a student query.\n"
    "Student query: {query}\n"
    "Course title: {course_title}\n"
    "Course summary: {summary}\n"
    "Step 1: Do you find this course relevant to the query?\n"
    "Step 2: If yes, grade it 1 (marginal) to 5 (ideal).\n"
    'Reply with strict JSON: {{"relevant": true|false, "score": 1-5}}.'
)


class HttpJudge:
    """Client for an external judging service.

    POSTs {"query", "course_title", "summary"} plus the rendered prompt;
    expects a strict JSON reply {"relevant": bool, "score": 1..5}. A
    relevant=false reply scores 0 regardless of any score field.
    Malformed replies are retried twice before erroring.
    """

    PARSE_RETRIES = 2

    def __init__(
        self,
        endpoint_url: str,
        prompt_template: str = DEFAULT_PROMPT_TEMPLATE,
        api_key: Optional[str] = None,
        timeout_s: float = 30.0,
        session: Optional[requests.Session] = None,
    ):
        self.endpoint_url = endpoint_url
        self.prompt_template = prompt_template
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.session = session or requests.Session()

    def judge(self, query_id: str, query_text: str, course: CourseForJudging) -> int:
        payload = {
            "query": query_text,
            "course_title": course.title,
            "summary": course.summary,
            "prompt": self.prompt_template.format(
                query=query_text,
                course_title=course.title,
                summary=course.summary,
            ),
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error = None
        for attempt in range(self.PARSE_RETRIES + 1):
            try:
                resp = self.session.post(
                    self.endpoint_url,
                    json=payload,
                    headers=headers,
                    timeout=self.timeout_s,
                )
                resp.raise_for_status()
            except requests.RequestException as exc:
                raise JudgeError(f"judge transport failure: {exc}") from exc
            try:
                return _parse_reply(resp.json())
            except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
                last_error = exc
                if attempt < self.PARSE_RETRIES:
                    time.sleep(0.2)
        raise JudgeError(f"unparseable judge reply after retries: {last_error}")


def _parse_reply(reply: dict) -> int:
    relevant = reply["relevant"]
    if not isinstance(relevant, bool):
        raise ValueError("'relevant' must be a boolean")
    if not relevant:
        return 0
    score = reply["score"]
    if not isinstance(score, int) or not 1 <= score <= 5:
        raise ValueError(f"score {score!r} out of 1..5")
    return score


def judge_rank_list(
    query_id: str,
    query_text: str,
    courses: Sequence[CourseForJudging],
    judge: JudgeClient,
) -> list[Judgment]:
    return [
        Judgment(query_id, course.course_id, judge.judge(query_id, query_text, course))
        for course in courses
    ]
