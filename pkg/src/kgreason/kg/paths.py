"""Reasoning-path structures, shortest-path enumeration, and grounding."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..errors import UnknownEntity
from .graph import KnowledgeGraph

SOURCE_TAGS = ("semantic", "structural", "gold")


@dataclass(frozen=True)
class RelationPath:
    """A sequence of relation ids with no endpoints bound."""

    relations: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.relations)


@dataclass(frozen=True)
class ReasoningPath:
    """An entity-grounded path; a bare entity when zero-hop.

    ``relations`` may use inverse or self-loop ids.  Equality and hashing
    ignore the provenance tag so de-duplication works across sources.
    """

    entities: tuple[int, ...]
    relations: tuple[int, ...]
    source: str = field(default="gold", compare=False)

    def __post_init__(self):
        if len(self.entities) != len(self.relations) + 1:
            raise ValueError(
                f"{len(self.entities)} entities cannot interleave "
                f"{len(self.relations)} relations"
            )
        if self.source not in SOURCE_TAGS:
            raise ValueError(f"unknown source tag {self.source!r}")

    @property
    def key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (self.entities, self.relations)

    def __len__(self) -> int:
        return len(self.relations)

    def validate_in(self, kg: KnowledgeGraph) -> None:
        """Raise unless every hop is an arc of the inverse-augmented graph."""
        for e in self.entities:
            kg.entity_label(e)
        for i, r in enumerate(self.relations):
            if not kg.has_arc(self.entities[i], r, self.entities[i + 1]):
                raise ValueError(
                    f"hop {i}: no arc {self.entities[i]} -{r}-> {self.entities[i+1]}"
                )


@dataclass(frozen=True)
class PathSet:
    """De-duplicated path collection with an exhaustiveness flag."""

    paths: tuple[ReasoningPath, ...]
    complete: bool = True

    def __post_init__(self):
        seen = set()
        for p in self.paths:
            if p.key in seen:
                raise ValueError(f"duplicate path {p.key}")
            seen.add(p.key)

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)


def dedup_paths(paths: Iterable[ReasoningPath]) -> list[ReasoningPath]:
    """Drop later duplicates of (entities, relations), keeping first-seen order."""
    seen: set[tuple] = set()
    out = []
    for p in paths:
        if p.key not in seen:
            seen.add(p.key)
            out.append(p)
    return out


# ----------------------------------------------------------------------
# shortest paths
# ----------------------------------------------------------------------


def shortest_paths(
    kg: KnowledgeGraph,
    sources: Iterable[int],
    targets: Iterable[int],
    max_hops: int,
) -> PathSet:
    """All simple paths of globally minimal hop count from sources to targets.

    Runs level-synchronous search over the inverse-augmented graph
    (self-loops excluded; they never shorten anything).  If the two sets
    intersect, the zero-hop paths on the intersection are the answer.
    Returns an empty set when nothing connects within ``max_hops``.
    """
    src = sorted(set(sources))
    tgt = sorted(set(targets))
    if not src or not tgt:
        raise ValueError("sources and targets must be non-empty")
    if max_hops < 0:
        raise ValueError(f"max_hops must be >= 0, got {max_hops}")
    for e in src + tgt:
        kg.entity_label(e)

    target_set = set(tgt)
    common = [e for e in src if e in target_set]
    if common:
        return PathSet(
            tuple(ReasoningPath((e,), (), source="gold") for e in common)
        )

    # frontier holds full partial paths; simple-path rule prunes revisits
    frontier: list[tuple[tuple[int, ...], tuple[int, ...]]] = [
        ((e,), ()) for e in src
    ]
    for _ in range(max_hops):
        if not frontier:
            break
        nxt = []
        hits = []
        for ents, rels in frontier:
            here = ents[-1]
            for r, v in kg.arcs_from(here):
                if v in ents:
                    continue
                cand = (ents + (v,), rels + (r,))
                if v in target_set:
                    hits.append(cand)
                nxt.append(cand)
        if hits:
            hits.sort()
            return PathSet(
                tuple(ReasoningPath(e, r, source="gold") for e, r in hits)
            )
        frontier = nxt
    return PathSet(())


# ----------------------------------------------------------------------
# relation-path grounding
# ----------------------------------------------------------------------


def instantiate_relation_path(
    kg: KnowledgeGraph,
    rp: RelationPath,
    start: int,
    limit: int = 256,
    source: str = "semantic",
) -> PathSet:
    """Ground a relation sequence against the graph from ``start``.

    Follows the relations in order over the inverse-augmented arc view
    (entity revisits permitted; the relation sequence is the contract).
    The frontier is capped at ``limit`` grounded continuations per step,
    deterministically, and truncation is reported via ``complete=False``.
    A zero-hop relation path grounds to the bare start entity.
    """
    kg.entity_label(start)
    for r in rp.relations:
        kg.relation_label(r)
    if limit <= 0:
        raise ValueError(f"limit must be positive, got {limit}")

    frontier: list[tuple[int, ...]] = [(start,)]
    truncated = False
    for r in rp.relations:
        nxt = []
        for ents in frontier:
            for v in kg.targets(ents[-1], r):
                nxt.append(ents + (v,))
        nxt.sort()
        if len(nxt) > limit:
            nxt = nxt[:limit]
            truncated = True
        frontier = nxt
        if not frontier:
            break
    paths = tuple(
        ReasoningPath(ents, rp.relations, source=source) for ents in frontier
    )
    return PathSet(paths, complete=not truncated)
