"""Semantic reasoning paths: LM generation, grounding, and distillation.

The LM is prompted for relation chains in plain text; candidates are
parsed against the relation vocabulary, grounded from each linked
question entity, and pooled.  For distillation, shortest gold paths
define a uniform posterior whose support becomes prompt/completion
pairs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import EmptyBatch, UnknownRelation, UnparsablePath
from .kg.graph import KnowledgeGraph
from .kg.paths import (
    PathSet,
    ReasoningPath,
    RelationPath,
    dedup_paths,
    instantiate_relation_path,
    shortest_paths,
)
from .kg.qa import QAInstance
from .lm import LMClient

GENERATION_PROMPT = (
    "Please generate the valid reasoning paths that can be helpful for answering "
    "the following question:\n\n{question}"
)

PATH_SEPARATOR = " -> "


def build_generation_prompt(question: str) -> str:
    return GENERATION_PROMPT.format(question=question)


# ----------------------------------------------------------------------
# path text round trip
# ----------------------------------------------------------------------


def path_to_text(kg: KnowledgeGraph, path: ReasoningPath) -> str:
    """Interleave entity and relation labels; a zero-hop path is its entity."""
    parts = [kg.entity_label(path.entities[0])]
    for i, r in enumerate(path.relations):
        parts.append(kg.relation_label(r))
        parts.append(kg.entity_label(path.entities[i + 1]))
    return PATH_SEPARATOR.join(parts)


def parse_path_text(kg: KnowledgeGraph, text: str) -> RelationPath:
    """Extract the relation skeleton from a path string.

    Tokens naming entities are skipped; tokens naming nothing reject the
    whole candidate (reported via UnknownRelation) because a silently
    shortened chain would ground to the wrong thing.
    """
    tokens = [t.strip() for t in text.split("->")]
    tokens = [t for t in tokens if t]
    relations = []
    unknown = []
    for tok in tokens:
        try:
            relations.append(kg.relation_id(tok))
            continue
        except UnknownRelation:
            pass
        if tok not in kg.entity_ids:
            unknown.append(tok)
    if not relations:
        raise UnparsablePath(text)
    if unknown:
        raise UnknownRelation(", ".join(unknown))
    return RelationPath(tuple(relations))


# ----------------------------------------------------------------------
# posterior over gold paths
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class PathPosterior:
    """Uniform distribution over the shortest gold paths of one instance."""

    support: PathSet
    probabilities: tuple[float, ...]
    empty_reason: str | None = None

    @property
    def empty(self) -> bool:
        return len(self.support) == 0


def path_posterior(kg: KnowledgeGraph, instance: QAInstance, max_hops: int) -> PathPosterior:
    if not instance.question_entities:
        return PathPosterior(PathSet(()), (), empty_reason="unlinked-question")
    if not instance.answer_entities:
        return PathPosterior(PathSet(()), (), empty_reason="unlinked-answers")
    support = shortest_paths(
        kg, instance.question_entities, instance.answer_entities, max_hops
    )
    if len(support) == 0:
        return PathPosterior(PathSet(()), (), empty_reason="no-connection")
    p = 1.0 / len(support)
    return PathPosterior(support, (p,) * len(support))


# ----------------------------------------------------------------------
# distillation corpus
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class DistillationPair:
    question_id: str
    prompt: str
    completion: str
    weight: float


@dataclass
class DistillationBuild:
    pairs: list[DistillationPair] = field(default_factory=list)
    exclusions: list[tuple[str, str]] = field(default_factory=list)  # (id, reason)
    emitted_questions: int = 0


def build_distillation_targets(
    kg: KnowledgeGraph,
    instances: list[QAInstance],
    max_hops: int,
) -> DistillationBuild:
    """One pair per gold shortest path; unlinkable/unreachable instances
    are excluded with a reason, so emitted + excluded = dataset size."""
    build = DistillationBuild()
    for inst in instances:
        posterior = path_posterior(kg, inst, max_hops)
        if posterior.empty:
            build.exclusions.append((inst.id, posterior.empty_reason or "empty"))
            continue
        prompt = build_generation_prompt(inst.question)
        for path, prob in zip(posterior.support, posterior.probabilities):
            build.pairs.append(
                DistillationPair(
                    question_id=inst.id,
                    prompt=prompt,
                    completion=path_to_text(kg, path),
                    weight=prob,
                )
            )
        build.emitted_questions += 1
    return build


def export_distillation_jsonl(pairs: list[DistillationPair], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(
                json.dumps(
                    {"prompt": pair.prompt, "completion": pair.completion},
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )


def distillation_loss(pairs: list[DistillationPair], lm: LMClient) -> float:
    """Posterior-weighted NLL of completions, averaged over questions.

    Contributions are combined with exact summation, so the value is
    independent of pair order.
    """
    if not pairs:
        raise EmptyBatch("no distillation pairs")
    terms = [-pair.weight * lm.logprob(pair.prompt, pair.completion) for pair in pairs]
    questions = {pair.question_id for pair in pairs}
    return math.fsum(terms) / len(questions)


# ----------------------------------------------------------------------
# LM path generation
# ----------------------------------------------------------------------


@dataclass
class SemanticGeneration:
    paths: PathSet
    candidates: list[str] = field(default_factory=list)
    dropped_unparsable: int = 0
    dropped_ungroundable: int = 0


def generate_semantic_paths(
    instance: QAInstance,
    kg: KnowledgeGraph,
    lm: LMClient,
    k: int = 3,
    limit: int = 256,
) -> SemanticGeneration:
    """Ask the LM for k relation chains and ground each from every linked
    question entity.  Unparsable or ungroundable candidates are dropped
    and counted; grounded duplicates collapse."""
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    prompt = build_generation_prompt(instance.question)
    candidates = lm.generate(prompt, temperature=0.0, num_return=k)

    grounded: list[ReasoningPath] = []
    complete = True
    dropped_unparsable = 0
    dropped_ungroundable = 0
    for text in candidates:
        try:
            rp = parse_path_text(kg, text)
        except (UnparsablePath, UnknownRelation):
            dropped_unparsable += 1
            continue
        found_any = False
        for start in instance.question_entities:
            result = instantiate_relation_path(kg, rp, start, limit=limit)
            complete = complete and result.complete
            if len(result) > 0:
                found_any = True
                grounded.extend(result.paths)
        if not found_any:
            dropped_ungroundable += 1
    unique = dedup_paths(grounded)
    return SemanticGeneration(
        paths=PathSet(tuple(unique), complete=complete),
        candidates=list(candidates),
        dropped_unparsable=dropped_unparsable,
        dropped_ungroundable=dropped_ungroundable,
    )
