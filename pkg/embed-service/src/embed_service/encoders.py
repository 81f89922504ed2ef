"""Encoder backends behind the service.

``hashed:<dim>`` is a deterministic word-hashing encoder for tests and
model-free deployments; any other model string is treated as a
sentence-transformers model name and loaded lazily.
"""

from __future__ import annotations

import hashlib

import numpy as np


class HashedEncoder:
    """Deterministic word-level hashing encoder (unit-norm rows)."""

    def __init__(self, dim: int):
        if dim < 2:
            raise ValueError("hashed encoder dim must be >= 2")
        self.dim = dim

    def encode(self, texts) -> np.ndarray:
        rows = []
        for text in texts:
            acc = np.zeros(self.dim, dtype=np.float64)
            for token in text.lower().split():
                digest = hashlib.blake2b(token.encode("utf-8"), digest_size=16).digest()
                index = int.from_bytes(digest[:8], "little") % self.dim
                acc[index] += 1.0 if digest[8] % 2 == 0 else -1.0
            norm = float(np.sqrt(np.dot(acc, acc)))
            if norm == 0.0:
                acc[0] = 1.0
            else:
                acc = acc / norm
            rows.append(acc)
        return np.stack(rows)


class SentenceTransformerEncoder:
    """Pretrained sentence encoder via the sentence-transformers package."""

    def __init__(self, model_name: str, device: str = "cpu"):
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(model_name, device=device)
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts) -> np.ndarray:
        rows = self._model.encode(list(texts), convert_to_numpy=True)
        return np.asarray(rows, dtype=np.float64)


def load_encoder(model: str, device: str = "cpu"):
    if model.startswith("hashed:"):
        return HashedEncoder(int(model.split(":", 1)[1]))
    return SentenceTransformerEncoder(model, device=device)
