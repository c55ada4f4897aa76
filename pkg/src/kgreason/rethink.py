"""Candidate path rethinking: score, filter, and order before prompting.

Each candidate gets a semantic score (question vs. whole-path text
embedding) and a structural score (question instructions vs. mean entity
state along the path); a convex combination is thresholded and the
survivors are ranked most-reliable first.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import torch

from .errors import ConfigError
from .kg.graph import KnowledgeGraph
from .kg.paths import PathSet, ReasoningPath
from .semantic import path_to_text


@dataclass(frozen=True)
class RethinkConfig:
    lambda1: float = 0.5
    lambda2: float = 0.5
    theta: float = 0.6

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigError("lambda weights must be non-negative")
        if abs(self.lambda1 + self.lambda2 - 1.0) > 1e-9:
            raise ConfigError(
                f"lambda1 + lambda2 must equal 1, got {self.lambda1 + self.lambda2}"
            )
        if not math.isfinite(self.theta):
            raise ConfigError("theta must be finite")


class EmbeddingProvider:
    """Vector sources for the two scores; implementations bind their graph."""

    def question_semantic(self, question: str) -> np.ndarray:
        raise NotImplementedError

    def path_semantic(self, path: ReasoningPath) -> np.ndarray:
        raise NotImplementedError

    def question_structural(self, question: str) -> np.ndarray:
        raise NotImplementedError

    def entity_structural(self, entity_id: int) -> np.ndarray:
        raise NotImplementedError


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; zero vectors score 0 instead of dividing by it."""
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def semantic_score(question: str, path: ReasoningPath, provider: EmbeddingProvider) -> float:
    return cosine(provider.question_semantic(question), provider.path_semantic(path))


def structural_score(question: str, path: ReasoningPath, provider: EmbeddingProvider) -> float:
    entity_mean = np.mean(
        [provider.entity_structural(e) for e in path.entities], axis=0
    )
    return cosine(provider.question_structural(question), entity_mean)


def combined_score(s1: float, s2: float, cfg: RethinkConfig) -> float:
    return cfg.lambda1 * s1 + cfg.lambda2 * s2


@dataclass(frozen=True)
class ScoredPath:
    path: ReasoningPath
    s1: float
    s2: float
    s: float
    retained: bool
    rank: int | None
    provenance: str
    text: str


@dataclass
class RethinkResult:
    retained: list[ScoredPath] = field(default_factory=list)
    filtered: list[ScoredPath] = field(default_factory=list)

    @property
    def all_filtered(self) -> bool:
        return not self.retained and bool(self.filtered)

    def __iter__(self):
        return iter(self.retained)


def _flatten(candidates: Iterable[PathSet | ReasoningPath]) -> list[ReasoningPath]:
    flat: list[ReasoningPath] = []
    for item in candidates:
        if isinstance(item, ReasoningPath):
            flat.append(item)
        else:
            flat.extend(item.paths)
    return flat


def rethink(
    kg: KnowledgeGraph,
    question: str,
    candidates: Sequence[PathSet | ReasoningPath],
    cfg: RethinkConfig,
    provider: EmbeddingProvider,
) -> RethinkResult:
    """Merge candidates across sources, score, filter at theta, and rank.

    Duplicate (entities, relations) pairs collapse into one candidate
    whose provenance records every source.  Retention requires a combined
    score strictly above theta; ties order by path length then serialized
    text, so the ranking is total and reproducible.
    """
    merged: dict[tuple, list[str]] = {}
    originals: dict[tuple, ReasoningPath] = {}
    for path in _flatten(candidates):
        merged.setdefault(path.key, []).append(path.source)
        originals.setdefault(path.key, path)

    scored = []
    for key, sources in merged.items():
        path = originals[key]
        text = path_to_text(kg, path)
        s1 = semantic_score(question, path, provider)
        s2 = structural_score(question, path, provider)
        s = combined_score(s1, s2, cfg)
        provenance = "both" if len(set(sources)) > 1 else sources[0]
        scored.append((s, len(path), text, s1, s2, path, provenance))

    scored.sort(key=lambda row: (-row[0], row[1], row[2]))
    result = RethinkResult()
    for s, _, text, s1, s2, path, provenance in scored:
        if s > cfg.theta:
            result.retained.append(
                ScoredPath(path, s1, s2, s, True, len(result.retained) + 1, provenance, text)
            )
        else:
            result.filtered.append(ScoredPath(path, s1, s2, s, False, None, provenance, text))
    return result


def score_report_lines(question_id: str, result: RethinkResult) -> list[str]:
    """JSONL rows for the per-question score report."""
    lines = []
    for sp in list(result.retained) + list(result.filtered):
        lines.append(
            json.dumps(
                {
                    "question_id": question_id,
                    "path": sp.text,
                    "s1": sp.s1,
                    "s2": sp.s2,
                    "s": sp.s,
                    "retained": sp.retained,
                    "rank": sp.rank,
                    "provenance": sp.provenance,
                },
                ensure_ascii=False,
                sort_keys=True,
            )
        )
    return lines


# ----------------------------------------------------------------------
# providers
# ----------------------------------------------------------------------


class StaticEmbeddingProvider(EmbeddingProvider):
    """Dict-backed provider for fixtures; unknown keys get zero vectors."""

    def __init__(
        self,
        dim: int,
        question_vecs: dict[str, np.ndarray] | None = None,
        path_vecs: dict[str, np.ndarray] | None = None,
        entity_vecs: dict[int, np.ndarray] | None = None,
        question_struct_vecs: dict[str, np.ndarray] | None = None,
        kg: KnowledgeGraph | None = None,
    ):
        self.dim = dim
        self.kg = kg
        self._q = question_vecs or {}
        self._p = path_vecs or {}
        self._e = entity_vecs or {}
        self._qs = question_struct_vecs or {}

    def _get(self, table: dict, key) -> np.ndarray:
        vec = table.get(key)
        if vec is None:
            return np.zeros(self.dim)
        return np.asarray(vec, dtype=np.float64)

    def question_semantic(self, question):
        return self._get(self._q, question)

    def path_semantic(self, path):
        key = path_to_text(self.kg, path) if self.kg is not None else path.key
        return self._get(self._p, key)

    def question_structural(self, question):
        if question in self._qs:
            return self._get(self._qs, question)
        return self._get(self._q, question)

    def entity_structural(self, entity_id):
        return self._get(self._e, entity_id)


class ReasonerEmbeddingProvider(EmbeddingProvider):
    """Backed by a trained reasoner and one question's forward cache.

    Semantic vectors come from the question encoder (applied to the
    question or to the serialized path); structural vectors are the
    final-step entity states and the mean instruction vector.
    """

    def __init__(self, model, kg: KnowledgeGraph, cache):
        self.model = model
        self.kg = kg
        self.cache = cache

    def _encode_text(self, text: str) -> np.ndarray:
        with torch.no_grad():
            v, _ = self.model.encode_question(text, 1)
        return v.numpy()

    def question_semantic(self, question):
        return self.cache.v_q.detach().numpy()

    def path_semantic(self, path):
        return self._encode_text(path_to_text(self.kg, path))

    def question_structural(self, question):
        return self.cache.omegas.detach().mean(dim=0).numpy()

    def entity_structural(self, entity_id):
        return self.cache.V[-1][entity_id].detach().numpy()
