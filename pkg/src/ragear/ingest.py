"""Transcript chunking pipeline.

Turns word-timestamped lecture transcripts into ordered, length-bounded
chunks whose start/end timestamps are copied from the underlying word
boundaries. Chunks are concatenations of whole sentences; sentence
boundaries come from a rule-based splitter so that reruns are
byte-identical.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .kg import Chunk

DEFAULT_ABBREVIATIONS = frozenset(
    {
        "approx.", "e.g.", "i.e.", "etc.", "cf.", "vs.", "al.",
        "dr.", "prof.", "mr.", "mrs.", "ms.", "fig.", "eq.", "sec.",
        "no.", "pp.", "vol.",
    }
)

# Forced sentence split after this many words, punctuation or not.
MAX_SENTENCE_WORDS = 200

_NUMBER_RE = re.compile(r"^\d[\d.,]*$")
_TERMINAL_RE = re.compile(r"[.!?][\"')\]]*$")


class IngestError(Exception):
    pass


@dataclass(frozen=True)
class TimedWord:
    text: str
    start_s: float
    end_s: float


@dataclass(frozen=True)
class TranscriptDoc:
    lesson_id: str
    course_id: str
    words: tuple[TimedWord, ...]


@dataclass(frozen=True)
class ChunkingConfig:
    min_chars: int = 200
    target_chars: int = 600
    max_chars: int = 1200

    def __post_init__(self):
        if not (1 <= self.min_chars <= self.target_chars <= self.max_chars):
            raise ValueError("need 1 <= min_chars <= target_chars <= max_chars")


@dataclass
class IngestStats:
    chunk_count: int = 0
    total_chars: int = 0
    total_hours: float = 0.0
    doc_count: int = 0

    @property
    def mean_chars(self) -> float:
        return self.total_chars / self.chunk_count if self.chunk_count else 0.0

    def to_dict(self) -> dict:
        return {
            "doc_count": self.doc_count,
            "chunk_count": self.chunk_count,
            "mean_chars": round(self.mean_chars, 2),
            "total_hours": round(self.total_hours, 4),
        }


def split_sentences(
    words: list[TimedWord] | tuple[TimedWord, ...],
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
) -> list[tuple[int, int]]:
    """Partition the word list into sentence spans [start, end).

    A boundary follows any token ending in '.', '!' or '?' (optionally
    trailed by quotes/brackets) unless the token is a known abbreviation
    or a bare number; spans longer than MAX_SENTENCE_WORDS are force-split.
    """
    if not words:
        raise ValueError("empty word list")
    spans = []
    start = 0
    for i, word in enumerate(words):
        token = word.text
        boundary = False
        if _TERMINAL_RE.search(token):
            lower = token.lower()
            if lower not in abbreviations and not _NUMBER_RE.match(token):
                boundary = True
        if i - start + 1 >= MAX_SENTENCE_WORDS:
            boundary = True
        if boundary:
            spans.append((start, i + 1))
            start = i + 1
    if start < len(words):
        spans.append((start, len(words)))
    return spans


def _span_text(words, span: tuple[int, int]) -> str:
    return " ".join(w.text for w in words[span[0] : span[1]])


def build_chunks(
    doc: TranscriptDoc,
    cfg: ChunkingConfig = ChunkingConfig(),
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
) -> list[Chunk]:
    """Greedy sentence packing into chunks of roughly target_chars."""
    _validate_doc(doc)
    spans = split_sentences(doc.words, abbreviations)

    # Each group is a list of sentence spans forming one chunk.
    groups: list[list[tuple[int, int]]] = []
    cur: list[tuple[int, int]] = []
    cur_len = 0
    for span in spans:
        sent_len = len(_span_text(doc.words, span))
        if cur and cur_len + 1 + sent_len > cfg.max_chars:
            groups.append(cur)
            cur, cur_len = [], 0
        cur.append(span)
        cur_len += sent_len if cur_len == 0 else 1 + sent_len
        if cur_len >= cfg.target_chars:
            groups.append(cur)
            cur, cur_len = [], 0
    if cur:
        groups.append(cur)

    if len(groups) >= 2:
        last_text_len = len(
            " ".join(_span_text(doc.words, s) for s in groups[-1])
        )
        if last_text_len < cfg.min_chars:
            tail = groups.pop()
            groups[-1].extend(tail)

    chunks = []
    for idx, group in enumerate(groups):
        first, last = group[0][0], group[-1][1] - 1
        text = " ".join(_span_text(doc.words, s) for s in group)
        chunks.append(
            Chunk(
                chunk_id=f"{doc.lesson_id}#{idx}",
                lesson_id=doc.lesson_id,
                course_id=doc.course_id,
                index=idx,
                text=text,
                start_s=doc.words[first].start_s,
                end_s=doc.words[last].end_s,
            )
        )
    return chunks


def _validate_doc(doc: TranscriptDoc):
    if not doc.words:
        raise IngestError(f"{doc.lesson_id}: empty transcript")
    prev = None
    for i, word in enumerate(doc.words):
        if not word.text:
            raise IngestError(f"{doc.lesson_id}: empty token at word {i}")
        if word.end_s < word.start_s or word.start_s < 0:
            raise IngestError(f"{doc.lesson_id}: bad timestamps at word {i}")
        if prev is not None and word.start_s < prev:
            raise IngestError(
                f"{doc.lesson_id}: out-of-order timestamp at word {i}"
            )
        prev = word.start_s


def load_transcript(path: str | Path) -> TranscriptDoc:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        words = tuple(
            TimedWord(w["text"], float(w["start_s"]), float(w["end_s"]))
            for w in raw["words"]
        )
        return TranscriptDoc(raw["lesson_id"], raw["course_id"], words)
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise IngestError(f"{path}: malformed transcript: {exc}") from exc


def chunk_to_dict(chunk: Chunk) -> dict:
    return {
        "chunk_id": chunk.chunk_id,
        "lesson_id": chunk.lesson_id,
        "course_id": chunk.course_id,
        "index": chunk.index,
        "text": chunk.text,
        "start_s": chunk.start_s,
        "end_s": chunk.end_s,
    }


def ingest_corpus(
    transcript_dir: str | Path,
    out_path: str | Path,
    cfg: ChunkingConfig = ChunkingConfig(),
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
) -> IngestStats:
    """Chunk every transcript under transcript_dir into a JSONL file.

    Documents are processed in sorted path order so reruns on identical
    inputs produce byte-identical output. Any per-file failure aborts the
    run after all files have been checked, reporting every bad file.
    """
    transcript_dir = Path(transcript_dir)
    paths = sorted(p for p in transcript_dir.glob("*.json") if p.is_file())

    docs = []
    errors = []
    for path in paths:
        try:
            doc = load_transcript(path)
            _validate_doc(doc)
            docs.append(doc)
        except IngestError as exc:
            errors.append(f"{path.name}: {exc}")
    if errors:
        raise IngestError("; ".join(errors))

    stats = IngestStats()
    seen_ids: set[str] = set()
    with open(out_path, "w", encoding="utf-8") as out:
        for doc in docs:
            chunks = build_chunks(doc, cfg, abbreviations)
            for chunk in chunks:
                if chunk.chunk_id in seen_ids:
                    raise IngestError(f"duplicate chunk id {chunk.chunk_id}")
                seen_ids.add(chunk.chunk_id)
                out.write(json.dumps(chunk_to_dict(chunk), ensure_ascii=False))
                out.write("\n")
                stats.chunk_count += 1
                stats.total_chars += len(chunk.text)
            stats.doc_count += 1
            stats.total_hours += (
                doc.words[-1].end_s - doc.words[0].start_s
            ) / 3600.0
    return stats


def read_chunks_jsonl(path: str | Path) -> list[Chunk]:
    chunks = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        chunks.append(
            Chunk(
                chunk_id=row["chunk_id"],
                lesson_id=row["lesson_id"],
                course_id=row["course_id"],
                index=row["index"],
                text=row["text"],
                start_s=float(row["start_s"]),
                end_s=float(row["end_s"]),
            )
        )
    return chunks
