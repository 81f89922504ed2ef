"""Candidate rendering and pluggable text-embedding backends.

Three backends cover the pipeline's needs: ``hashed`` is a deterministic,
model-free character-trigram embedder for reproducible runs and tests;
``file`` replays precomputed vectors from a JSONL dump; ``remote`` speaks
the POST /embed protocol of an encoder service.

The hashed recipe is pinned bit-for-bit: lowercase, pad to "^text$", take
character 3-grams, FNV-1a 64-bit hash each gram, add +/-1 (sign bit of the
hash) to component (hash >> 1) mod dim, then L2-normalize.  A text with no
trigrams (or full sign cancellation) maps to the unit basis vector e0.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import requests

from .errors import (
    BackendUnavailable,
    DegenerateVector,
    DimMismatch,
    MissingEmbedding,
)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

BACKENDS = ("hashed", "file", "remote")


@dataclass
class EmbedderConfig:
    """Configuration for one embedding backend.

    Exactly one backend is active; ``dim`` applies to the hashed backend,
    ``path`` to the file backend, and ``endpoint`` to the remote backend.
    """

    backend: str = "hashed"
    dim: int | None = 256
    normalize: bool = True
    path: str | None = None
    endpoint: str | None = None
    batch_size: int = 64
    timeout: float = 60.0

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown embedder backend {self.backend!r}")
        if self.backend == "hashed":
            if self.dim is None or self.dim < 2:
                raise ValueError("hashed backend requires dim >= 2")
        elif self.backend == "file":
            if not self.path:
                raise ValueError("file backend requires a vector file path")
        elif not self.endpoint:
            raise ValueError("remote backend requires an endpoint URL")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def descriptor(self) -> dict:
        """JSON-safe description persisted with induced schemas."""
        out: dict = {"backend": self.backend, "normalize": self.normalize}
        if self.backend == "hashed":
            out["dim"] = self.dim
        elif self.backend == "file":
            out["path"] = self.path
        else:
            out["endpoint"] = self.endpoint
        return out

    @classmethod
    def from_descriptor(cls, descriptor: dict) -> "EmbedderConfig":
        known = {"backend", "dim", "normalize", "path", "endpoint"}
        kwargs = {k: v for k, v in descriptor.items() if k in known}
        if kwargs.get("backend") != "hashed":
            kwargs.setdefault("dim", None)
        return cls(**kwargs)


def render_candidate_text(slot_name: str, value: str) -> str:
    """Render one candidate as the "slot: value" encoder input."""
    if not slot_name or not value:
        raise ValueError("slot name and value must be non-empty")
    return f"{slot_name}: {value}"


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def hashed_ngram_embed(text: str, dim: int) -> np.ndarray:
    """Deterministic character-trigram embedding (unit L2 norm)."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    padded = "^" + text.lower() + "$"
    acc = np.zeros(dim, dtype=np.float64)
    for i in range(len(padded) - 2):
        h = _fnv1a64(padded[i : i + 3].encode("utf-8"))
        acc[(h >> 1) % dim] += 1.0 if (h & 1) == 0 else -1.0
    norm = float(np.sqrt(np.dot(acc, acc)))
    if norm == 0.0:
        acc[0] = 1.0
        return acc
    return acc / norm


def load_vector_file(path) -> dict[str, np.ndarray]:
    """Load a precomputed-vector JSONL dump, checking dim consistency."""
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                text = record["text"]
                values = record["vector"]
            except (ValueError, KeyError, TypeError):
                raise DimMismatch(f"{path}:{line_no}: malformed vector record")
            vec = np.asarray(values, dtype=np.float64)
            if vec.ndim != 1 or not np.all(np.isfinite(vec)):
                raise DimMismatch(f"{path}:{line_no}: vector is not a finite 1-d array")
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise DimMismatch(
                    f"{path}:{line_no}: vector dim {vec.shape[0]} != {dim}"
                )
            vectors[text] = vec
    return vectors


def write_vector_file(path, texts: Sequence[str], matrix: np.ndarray) -> None:
    """Dump vectors in the file-backend format (one record per text)."""
    with open(path, "w", encoding="utf-8") as fh:
        for text, row in zip(texts, matrix):
            fh.write(
                json.dumps({"text": text, "vector": [float(x) for x in row]}) + "\n"
            )


class _RemoteEmbedClient:
    def __init__(self, config: EmbedderConfig):
        self.config = config

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        rows: list[np.ndarray] = []
        dim: int | None = None
        for start in range(0, len(texts), self.config.batch_size):
            chunk = list(texts[start : start + self.config.batch_size])
            batch = self._one_request(chunk)
            if dim is None:
                dim = batch.shape[1]
            elif batch.shape[1] != dim:
                raise DimMismatch(
                    f"remote backend changed dim {dim} -> {batch.shape[1]} mid-run"
                )
            rows.append(batch)
        return np.concatenate(rows, axis=0)

    def _one_request(self, chunk: list[str]) -> np.ndarray:
        try:
            response = requests.post(
                self.config.endpoint,
                json={"texts": chunk},
                timeout=self.config.timeout,
            )
        except requests.RequestException as exc:
            raise BackendUnavailable(f"embedding endpoint failed: {exc}") from exc
        if response.status_code != 200:
            raise BackendUnavailable(
                f"embedding endpoint returned status {response.status_code}"
            )
        try:
            body = response.json()
            embeddings = body["embeddings"]
        except (ValueError, KeyError):
            raise BackendUnavailable("embedding endpoint returned malformed body")
        if not isinstance(embeddings, list) or len(embeddings) != len(chunk):
            raise BackendUnavailable(
                "embedding endpoint did not preserve batch size"
            )
        batch = np.asarray(embeddings, dtype=np.float64)
        if batch.ndim != 2 or not np.all(np.isfinite(batch)):
            raise BackendUnavailable("embedding endpoint returned non-finite vectors")
        return batch


def _hashed_rows(texts: Sequence[str], dim: int, workers: int) -> np.ndarray:
    if workers <= 1 or len(texts) < 2 * workers:
        return np.stack([hashed_ngram_embed(t, dim) for t in texts])
    # Shard into contiguous chunks; reassembly in chunk order keeps rows
    # aligned regardless of worker count.
    chunk = -(-len(texts) // workers)
    spans = [texts[i : i + chunk] for i in range(0, len(texts), chunk)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(
            pool.map(lambda span: [hashed_ngram_embed(t, dim) for t in span], spans)
        )
    return np.stack([row for part in parts for row in part])


def embed_batch(
    config: EmbedderConfig, texts: Sequence[str], workers: int = 1
) -> np.ndarray:
    """Embed texts into an (n, dim) float64 matrix, one row per text.

    Rows are aligned with ``texts``; identical texts yield identical rows.
    With ``normalize`` every row is scaled to unit L2 norm.
    """
    if len(texts) == 0:
        raise ValueError("embed_batch requires at least one text")
    if config.backend == "hashed":
        matrix = _hashed_rows(texts, config.dim, workers)
    elif config.backend == "file":
        try:
            table = load_vector_file(config.path)
        except OSError as exc:
            raise BackendUnavailable(f"vector file backend unavailable: {exc}") from exc
        rows = []
        for text in texts:
            if text not in table:
                raise MissingEmbedding(f"vector file has no entry for {text!r}")
            rows.append(table[text])
        matrix = np.stack(rows)
    else:
        matrix = _RemoteEmbedClient(config).embed(texts)

    if config.normalize:
        norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix))
        if np.any(norms == 0.0):
            bad = int(np.nonzero(norms == 0.0)[0][0])
            raise DegenerateVector(f"cannot normalize zero vector for {texts[bad]!r}")
        matrix = matrix / norms[:, None]
    return matrix


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity clamped into [-1, 1] against rounding."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dim mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.sqrt(np.dot(a, a)))
    norm_b = float(np.sqrt(np.dot(b, b)))
    if norm_a == 0.0 or norm_b == 0.0:
        raise DegenerateVector("cosine similarity of a zero-norm vector")
    return min(1.0, max(-1.0, float(np.dot(a, b)) / (norm_a * norm_b)))
