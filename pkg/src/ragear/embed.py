"""Embedding providers.

Three interchangeable backends produce L2-normalized float32 vectors:
an HTTP client for an external embedding service, a reader over a
precomputed JSONL embedding file, and a deterministic hash-based test
embedder used as the fixture oracle throughout the test suite.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import requests

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3

_TOKEN_RE = re.compile(r"[^0-9a-z]+")


class EmbedError(Exception):
    pass


@dataclass
class EmbedderConfig:
    kind: str = "test"  # http | file | test
    dim: int = 256
    endpoint_url: Optional[str] = None
    api_key_env: Optional[str] = None
    query_prefix: str = "query: "
    passage_prefix: str = "passage: "
    timeout_ms: int = 30000
    max_batch: int = 64
    path: Optional[str] = None  # file kind: embedding JSONL

    def __post_init__(self):
        if self.kind not in {"http", "file", "test"}:
            raise ValueError(f"unknown embedder kind: {self.kind}")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.kind == "http" and not self.endpoint_url:
            raise ValueError("http embedder requires endpoint_url")
        if self.kind == "file" and not self.path:
            raise ValueError("file embedder requires path")


def fnv1a64(data: bytes) -> int:
    h = FNV64_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_RE.split(text.lower()) if t]


def normalize(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float32)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        out = np.zeros_like(vec)
        out[0] = 1.0
        return out
    return (vec / norm).astype(np.float32)


def hash_embed(text: str, dim: int) -> np.ndarray:
    """Deterministic signed bag-of-tokens embedding (FNV-1a 64 buckets)."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    vec = np.zeros(dim, dtype=np.float64)
    for token in tokenize(text):
        h = fnv1a64(token.encode("utf-8"))
        sign = 1.0 if (h >> 63) % 2 == 0 else -1.0
        vec[h % dim] += sign
    return normalize(vec)


class TestEmbedder:
    """Deterministic embedder for fixtures and golden files."""

    __test__ = False  # keep pytest from collecting this as a test class

    def __init__(self, config: EmbedderConfig):
        self.config = config

    def embed_passages(self, texts: Sequence[str]) -> list[np.ndarray]:
        _check_texts(texts)
        return [hash_embed(t, self.config.dim) for t in texts]

    def embed_query(self, text: str) -> np.ndarray:
        return self.embed_passages([text])[0]


class FileEmbedder:
    """Looks vectors up by text id in a precomputed embedding file."""

    def __init__(self, config: EmbedderConfig):
        self.config = config
        self.dim, _, self._vectors = read_embeddings(config.path)
        if self.dim != config.dim:
            raise EmbedError(
                f"embedding file dim {self.dim} != configured {config.dim}"
            )

    def lookup(self, item_id: str) -> np.ndarray:
        try:
            return self._vectors[item_id]
        except KeyError:
            raise EmbedError(f"no stored embedding for id {item_id!r}") from None

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._vectors

    def ids(self) -> list[str]:
        return list(self._vectors)


class HttpEmbedder:
    """Client for the canonical embedding-service wire format.

    POST {"input": [texts], "prefix": "..."} -> {"embeddings": [[f32...]]}.
    Batches requests and retries transient failures with exponential
    backoff (3 attempts).
    """

    RETRIES = 3

    def __init__(self, config: EmbedderConfig, session: Optional[requests.Session] = None):
        self.config = config
        self.session = session or requests.Session()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key_env:
            key = os.environ.get(self.config.api_key_env)
            if not key:
                raise EmbedError(
                    f"api key env var {self.config.api_key_env} is not set"
                )
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post_batch(self, texts: list[str], prefix: str) -> list[np.ndarray]:
        payload = {"input": texts, "prefix": prefix}
        timeout = self.config.timeout_ms / 1000.0
        last_exc = None
        for attempt in range(self.RETRIES):
            try:
                resp = self.session.post(
                    self.config.endpoint_url,
                    json=payload,
                    headers=self._headers(),
                    timeout=timeout,
                )
                if resp.status_code >= 500:
                    raise EmbedError(f"server error {resp.status_code}")
                resp.raise_for_status()
                rows = resp.json()["embeddings"]
                break
            except (requests.RequestException, EmbedError, KeyError, ValueError) as exc:
                last_exc = exc
                if attempt < self.RETRIES - 1:
                    time.sleep(0.25 * 2**attempt)
        else:
            raise EmbedError(
                f"embedding service unreachable after {self.RETRIES} attempts: {last_exc}"
            )
        if len(rows) != len(texts):
            raise EmbedError(
                f"service returned {len(rows)} vectors for {len(texts)} inputs"
            )
        out = []
        for row in rows:
            vec = np.asarray(row, dtype=np.float32)
            if vec.shape != (self.config.dim,):
                raise EmbedError(
                    f"dimension mismatch: got {vec.shape}, want ({self.config.dim},)"
                )
            out.append(normalize(vec))
        return out

    def embed_passages(self, texts: Sequence[str]) -> list[np.ndarray]:
        _check_texts(texts)
        out = []
        for i in range(0, len(texts), self.config.max_batch):
            out.extend(
                self._post_batch(
                    list(texts[i : i + self.config.max_batch]),
                    self.config.passage_prefix,
                )
            )
        return out

    def embed_query(self, text: str) -> np.ndarray:
        _check_texts([text])
        return self._post_batch([text], self.config.query_prefix)[0]


def _check_texts(texts: Sequence[str]):
    if not texts:
        raise EmbedError("no texts to embed")
    for i, t in enumerate(texts):
        if not t:
            raise EmbedError(f"empty text at position {i}")


def make_embedder(config: EmbedderConfig):
    if config.kind == "test":
        return TestEmbedder(config)
    if config.kind == "file":
        return FileEmbedder(config)
    return HttpEmbedder(config)


# -- embedding file I/O ---------------------------------------------------


def write_embeddings(
    path: str | Path,
    dim: int,
    kind: str,
    items: Sequence[tuple[str, np.ndarray]],
):
    """Write the JSONL embedding file: a header line, then one row per id."""
    with open(path, "w", encoding="utf-8") as out:
        out.write(json.dumps({"dim": dim, "kind": kind}) + "\n")
        for item_id, vec in items:
            vec = np.asarray(vec, dtype=np.float32)
            if vec.shape != (dim,):
                raise EmbedError(f"{item_id}: vector shape {vec.shape} != ({dim},)")
            row = {"id": item_id, "vector": [float(x) for x in vec]}
            out.write(json.dumps(row) + "\n")


def read_embeddings(path: str | Path) -> tuple[int, str, dict[str, np.ndarray]]:
    """Read an embedding JSONL file; vectors come back re-normalized."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise EmbedError(f"{path}: empty embedding file")
    header = json.loads(lines[0])
    dim = int(header["dim"])
    kind = header.get("kind", "")
    vectors: dict[str, np.ndarray] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        row = json.loads(line)
        vec = np.asarray(row["vector"], dtype=np.float32)
        if vec.shape != (dim,):
            raise EmbedError(
                f"{path}:{line_no}: vector dim {vec.shape} != header dim {dim}"
            )
        if row["id"] in vectors:
            raise EmbedError(f"{path}:{line_no}: duplicate id {row['id']!r}")
        vectors[row["id"]] = normalize(vec)
    return dim, kind, vectors
