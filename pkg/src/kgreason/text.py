"""Tokenization and pretrained word-vector lookup.

Tokens are lowercase alphanumeric runs; punctuation and whitespace both
split, so dotted relation names share tokens with natural questions.
Out-of-vocabulary tokens map to a zero vector ("UNK").
"""

from __future__ import annotations

import re

import numpy as np

from .errors import MalformedRecord

_TOKEN_RE = re.compile(r"[0-9a-z]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class WordVectorTable:
    """Token -> fixed float vector, loaded from a text embedding file."""

    def __init__(self, vectors: dict[str, np.ndarray], dim: int):
        self.dim = dim
        self._vectors = vectors
        self._unk = np.zeros(dim, dtype=np.float64)

    def __contains__(self, token: str) -> bool:
        return token.lower() in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def get(self, token: str) -> np.ndarray:
        return self._vectors.get(token.lower(), self._unk)

    def embed(self, tokens: list[str]) -> np.ndarray:
        """Stack token vectors into a (len(tokens), dim) matrix."""
        if not tokens:
            raise ValueError("cannot embed an empty token sequence")
        return np.stack([self.get(t) for t in tokens])


def load_word_vectors(path: str) -> WordVectorTable:
    """Parse ``token v1 v2 ... vd`` lines; dimension fixed by the first row."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 2:
                raise MalformedRecord(line_no, "expected a token and at least one value")
            token = parts[0].lower()
            try:
                values = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            except ValueError:
                raise MalformedRecord(line_no, f"non-numeric vector entry in {line!r}") from None
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise MalformedRecord(
                    line_no, f"dimension {len(values)} does not match first row ({dim})"
                )
            vectors[token] = values
    if dim is None:
        raise MalformedRecord(0, "word-vector file is empty")
    return WordVectorTable(vectors, dim)


def save_word_vectors(vectors: dict[str, np.ndarray], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for token, vec in vectors.items():
            values = " ".join(f"{v:.6f}" for v in np.asarray(vec).ravel())
            fh.write(f"{token} {values}\n")
