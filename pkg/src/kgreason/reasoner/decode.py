"""Grounded beam decoding over a cached forward pass."""

from __future__ import annotations

import torch

from ..errors import UnknownEntity
from ..kg.graph import KnowledgeGraph
from ..kg.paths import PathSet, ReasoningPath
from .model import ForwardCache, Reasoner

_Item = tuple[float, tuple[int, ...], tuple[int, ...]]


def decode_from_cache(kg: KnowledgeGraph, cache: ForwardCache, beam: int) -> PathSet:
    """Beam over arcs: step i weighs P^{i-1} at the head times the mean
    relation match, and the terminal entity contributes P^n.

    Self-loop arcs participate, so answers nearer than n hops surface as
    padded length-n paths.  Ties break on the path tuple itself, which
    keeps the ordering deterministic.
    """
    if beam <= 0:
        raise ValueError(f"beam must be positive, got {beam}")
    if not cache.seeds:
        raise UnknownEntity("empty seed set")
    with torch.no_grad():
        P = [p.detach() for p in cache.P]
        mean_match = [m.mean(dim=-1) for m in cache.m_rel]  # (R_aug,) each

    items: list[_Item] = [(1.0, (e,), ()) for e in sorted(set(cache.seeds))]
    complete = True
    for i, mm in enumerate(mean_match):
        grown: list[_Item] = []
        for score, ents, rels in items:
            u = ents[-1]
            p_here = float(P[i][u])
            for r, v in kg.arcs_from(u, include_stay=True):
                grown.append(
                    (score * p_here * float(mm[r]), ents + (v,), rels + (r,))
                )
        grown.sort(key=lambda it: (-it[0], it[1], it[2]))
        if len(grown) > beam:
            grown = grown[:beam]
            complete = False
        items = grown

    final = [
        (score * float(P[-1][ents[-1]]), ents, rels) for score, ents, rels in items
    ]
    final.sort(key=lambda it: (-it[0], it[1], it[2]))
    paths = tuple(
        ReasoningPath(ents, rels, source="structural") for _, ents, rels in final
    )
    return PathSet(paths, complete=complete)


def decode_paths(
    model: Reasoner,
    kg: KnowledgeGraph,
    question: str,
    seeds: tuple[int, ...],
    beam: int,
    n: int,
) -> PathSet:
    """Forward pass from the question entities, then beam decode."""
    cache = model.forward_pass(kg, question, tuple(seeds), n, direction="forward")
    return decode_from_cache(kg, cache, beam)
