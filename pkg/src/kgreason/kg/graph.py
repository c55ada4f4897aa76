"""Knowledge-graph container: vocabularies, triple indexes, subgraphs.

Entities and relations are interned to dense integer ids in first-seen
order.  For every base relation ``r`` an inverse ``r⁻¹`` is registered at
ingestion with id ``r + |R|``; traversal helpers expose the
inverse-augmented arc view so backward hops never need special casing.
A reserved self-loop relation ``__stay__`` (id ``2|R|``) lets reasoners
pad paths shorter than their step budget.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from ..errors import MalformedRecord, UnknownEntity, UnknownRelation

INV_SUFFIX = "⁻¹"
STAY_LABEL = "__stay__"

Triple = tuple[int, int, int]


@dataclass(eq=False)
class KnowledgeGraph:
    """Immutable-by-convention triple store with dense vocabularies.

    Compared by identity; use the triple-file round trip for structural
    comparison.
    """

    entities: tuple[str, ...]
    relations: tuple[str, ...]
    triples: frozenset[Triple]
    out_index: dict[int, tuple[tuple[int, int], ...]] = field(repr=False)
    in_index: dict[int, tuple[tuple[int, int], ...]] = field(repr=False)
    entity_ids: dict[str, int] = field(repr=False)
    relation_ids: dict[str, int] = field(repr=False)

    # ------------------------------------------------------------------
    # vocabulary
    # ------------------------------------------------------------------

    @property
    def num_entities(self) -> int:
        return len(self.entities)

    @property
    def num_base_relations(self) -> int:
        return len(self.relations)

    @property
    def num_relations_augmented(self) -> int:
        """Base relations, their inverses, and the reserved self-loop."""
        return 2 * len(self.relations) + 1

    @property
    def stay_id(self) -> int:
        return 2 * len(self.relations)

    def entity_id(self, label: str) -> int:
        try:
            return self.entity_ids[label]
        except KeyError:
            raise UnknownEntity(label) from None

    def entity_label(self, entity_id: int) -> str:
        self._check_entity(entity_id)
        return self.entities[entity_id]

    def relation_id(self, label: str) -> int:
        """Resolve a base, inverse, or self-loop relation label."""
        rid = self.relation_ids.get(label)
        if rid is not None:
            return rid
        if label == STAY_LABEL:
            return self.stay_id
        if label.endswith(INV_SUFFIX):
            base = self.relation_ids.get(label[: -len(INV_SUFFIX)])
            if base is not None:
                return base + len(self.relations)
        raise UnknownRelation(label)

    def relation_label(self, relation_id: int) -> str:
        nrel = len(self.relations)
        if 0 <= relation_id < nrel:
            return self.relations[relation_id]
        if nrel <= relation_id < 2 * nrel:
            return self.relations[relation_id - nrel] + INV_SUFFIX
        if relation_id == self.stay_id:
            return STAY_LABEL
        raise UnknownRelation(str(relation_id))

    def inverse_id(self, relation_id: int) -> int:
        """Map r to r⁻¹ and back; the self-loop is its own inverse."""
        nrel = len(self.relations)
        if 0 <= relation_id < nrel:
            return relation_id + nrel
        if nrel <= relation_id < 2 * nrel:
            return relation_id - nrel
        if relation_id == self.stay_id:
            return relation_id
        raise UnknownRelation(str(relation_id))

    # ------------------------------------------------------------------
    # traversal
    # ------------------------------------------------------------------

    def neighbors(self, entity_id: int, direction: str) -> tuple[tuple[int, int], ...]:
        """(relation_id, entity_id) pairs adjacent to ``entity_id``.

        ``forward`` follows out-edges, ``backward`` in-edges; both report
        base relation ids and are sorted by (relation_id, entity_id).
        """
        self._check_entity(entity_id)
        if direction == "forward":
            return self.out_index.get(entity_id, ())
        if direction == "backward":
            return self.in_index.get(entity_id, ())
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")

    def arcs_from(self, entity_id: int, include_stay: bool = False) -> list[tuple[int, int]]:
        """Inverse-augmented out-arcs of an entity.

        Original out-edges keep their relation id; in-edges appear with
        the inverse id.  Sorted by (relation_id, target), so the optional
        self-loop (largest id) lands last.
        """
        self._check_entity(entity_id)
        nrel = len(self.relations)
        arcs = list(self.out_index.get(entity_id, ()))
        arcs.extend((r + nrel, h) for r, h in self.in_index.get(entity_id, ()))
        arcs.sort()
        if include_stay:
            arcs.append((self.stay_id, entity_id))
        return arcs

    def targets(self, entity_id: int, relation_id: int) -> tuple[int, ...]:
        """Entities reachable from ``entity_id`` via one augmented arc."""
        self._check_entity(entity_id)
        nrel = len(self.relations)
        if relation_id == self.stay_id:
            return (entity_id,)
        if 0 <= relation_id < nrel:
            pairs = self.out_index.get(entity_id, ())
            base = relation_id
        elif nrel <= relation_id < 2 * nrel:
            pairs = self.in_index.get(entity_id, ())
            base = relation_id - nrel
        else:
            raise UnknownRelation(str(relation_id))
        return tuple(t for r, t in pairs if r == base)

    def has_arc(self, head: int, relation_id: int, tail: int) -> bool:
        return tail in self.targets(head, relation_id)

    def augmented_arcs(self, include_stay: bool = True) -> list[Triple]:
        """Every arc of the inverse-augmented graph, deterministically ordered.

        The set is closed under (flip direction, invert relation), so one
        arc list serves propagation in both directions.
        """
        nrel = len(self.relations)
        arcs: list[Triple] = []
        for h, r, t in self.triples:
            arcs.append((h, r, t))
            arcs.append((t, r + nrel, h))
        if include_stay:
            arcs.extend((e, self.stay_id, e) for e in range(len(self.entities)))
        arcs.sort()
        return arcs

    # ------------------------------------------------------------------
    # subgraph extraction
    # ------------------------------------------------------------------

    def subgraph(self, seeds: Iterable[int], hops: int) -> "KnowledgeGraph":
        """Induced graph of all triples crossed within ``hops`` undirected steps.

        Vocabularies are re-densified (parent order preserved).  hops=0
        keeps the seed entities and no triples.
        """
        seed_list = sorted(set(seeds))
        for e in seed_list:
            self._check_entity(e)
        if hops < 0:
            raise ValueError(f"hops must be >= 0, got {hops}")

        dist = {e: 0 for e in seed_list}
        frontier = seed_list
        undirected: dict[int, set[int]] = {}
        for h, _, t in self.triples:
            undirected.setdefault(h, set()).add(t)
            undirected.setdefault(t, set()).add(h)
        for depth in range(1, hops + 1):
            nxt = []
            for e in frontier:
                for other in undirected.get(e, ()):
                    if other not in dist:
                        dist[other] = depth
                        nxt.append(other)
            frontier = nxt

        # a triple is crossed iff one endpoint sits strictly inside the ball
        inner = {e for e, d in dist.items() if d <= hops - 1}
        kept = sorted(
            (h, r, t) for h, r, t in self.triples if h in inner or t in inner
        )
        ent_ids = set(seed_list)
        for h, _, t in kept:
            ent_ids.add(h)
            ent_ids.add(t)
        ent_order = [e for e in range(len(self.entities)) if e in ent_ids]
        rel_order = sorted({r for _, r, _ in kept})
        records = [
            (self.entities[h], self.relations[r], self.entities[t])
            for h, r, t in kept
        ]
        # re-ingest with explicit vocab order so isolated seeds survive
        return build_graph(
            records,
            entity_order=[self.entities[e] for e in ent_order],
            relation_order=[self.relations[r] for r in rel_order],
        )

    # ------------------------------------------------------------------

    def _check_entity(self, entity_id: int) -> None:
        if not 0 <= entity_id < len(self.entities):
            raise UnknownEntity(str(entity_id))


# ----------------------------------------------------------------------
# construction
# ----------------------------------------------------------------------


def build_graph(
    records: Iterable[tuple[str, str, str]],
    entity_order: Sequence[str] | None = None,
    relation_order: Sequence[str] | None = None,
) -> KnowledgeGraph:
    """Intern labels and index triples; duplicates collapse silently."""
    entities: dict[str, int] = {}
    relations: dict[str, int] = {}
    for label in entity_order or ():
        entities.setdefault(label, len(entities))
    for label in relation_order or ():
        relations.setdefault(label, len(relations))

    triples: set[Triple] = set()
    for head, rel, tail in records:
        h = entities.setdefault(head, len(entities))
        r = relations.setdefault(rel, len(relations))
        t = entities.setdefault(tail, len(entities))
        triples.add((h, r, t))

    out: dict[int, list[tuple[int, int]]] = {}
    inc: dict[int, list[tuple[int, int]]] = {}
    for h, r, t in triples:
        out.setdefault(h, []).append((r, t))
        inc.setdefault(t, []).append((r, h))
    return KnowledgeGraph(
        entities=tuple(entities),
        relations=tuple(relations),
        triples=frozenset(triples),
        out_index={e: tuple(sorted(p)) for e, p in out.items()},
        in_index={e: tuple(sorted(p)) for e, p in inc.items()},
        entity_ids=dict(entities),
        relation_ids=dict(relations),
    )


def ingest_triples(records: Iterable[tuple[str, str, str]]) -> KnowledgeGraph:
    """Build a graph from (head, relation, tail) label triples.

    Relation labels may not collide with the reserved self-loop label.
    """
    checked = []
    for i, rec in enumerate(records, start=1):
        if len(rec) != 3 or any(not f for f in rec):
            raise MalformedRecord(i, f"expected 3 non-empty fields, got {rec!r}")
        if rec[1] == STAY_LABEL:
            raise MalformedRecord(i, f"relation label {STAY_LABEL!r} is reserved")
        checked.append(rec)
    return build_graph(checked)


# ----------------------------------------------------------------------
# triple file format: UTF-8, one TAB-separated triple per line,
# blank lines and lines starting with '#' skipped
# ----------------------------------------------------------------------


def iter_triple_lines(stream: io.TextIOBase) -> Iterator[tuple[str, str, str]]:
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3 or any(not f.strip() for f in fields):
            raise MalformedRecord(line_no, f"expected 3 tab-separated fields, got {line!r}")
        head, rel, tail = (f.strip() for f in fields)
        if rel == STAY_LABEL:
            raise MalformedRecord(line_no, f"relation label {STAY_LABEL!r} is reserved")
        yield head, rel, tail


def load_triples_file(path: str) -> KnowledgeGraph:
    with open(path, encoding="utf-8") as fh:
        return build_graph(list(iter_triple_lines(fh)))


def save_triples_file(kg: KnowledgeGraph, path: str) -> None:
    """Write base triples (no inverses, no self-loops) in id order."""
    with open(path, "w", encoding="utf-8") as fh:
        for h, r, t in sorted(kg.triples):
            fh.write(f"{kg.entities[h]}\t{kg.relations[r]}\t{kg.entities[t]}\n")
