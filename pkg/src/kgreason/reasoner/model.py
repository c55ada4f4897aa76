"""Structural path reasoner: question-conditioned message passing.

The model keeps one embedding per relation of the inverse-augmented
vocabulary (base, inverse, self-loop).  A question is read by an LSTM
encoder; a recurrent decoder initialized from its final state emits one
instruction vector per reasoning step.  Each step gates relation
embeddings against the current instruction, propagates probability mass
along graph arcs, refreshes entity states through a feed-forward fuse,
and renormalizes with a softmax over the entities of the active graph.

Everything runs in float64 on CPU so finite-difference checks of the
loss surface are meaningful.
"""

from __future__ import annotations

import hashlib
import weakref
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from ..errors import DimensionMismatch, NotNormalized, UnknownEntity
from ..kg.graph import KnowledgeGraph
from ..text import WordVectorTable, tokenize

_NORM_TOL = 1e-6


def vocab_hash(labels: tuple[str, ...]) -> str:
    digest = hashlib.sha256("\x1f".join(labels).encode("utf-8"))
    return digest.hexdigest()


@dataclass
class GraphTensors:
    """Arc index tensors for one graph, shared by both pass directions.

    The augmented arc set is closed under (flip, invert), so propagating
    backward from answers needs no second arc list; only the seeding
    changes.
    """

    src: torch.Tensor
    rel: torch.Tensor
    dst: torch.Tensor
    num_entities: int
    num_relations: int

    @classmethod
    def from_graph(cls, kg: KnowledgeGraph) -> "GraphTensors":
        arcs = kg.augmented_arcs(include_stay=True)
        src = torch.tensor([a[0] for a in arcs], dtype=torch.long)
        rel = torch.tensor([a[1] for a in arcs], dtype=torch.long)
        dst = torch.tensor([a[2] for a in arcs], dtype=torch.long)
        return cls(src, rel, dst, kg.num_entities, kg.num_relations_augmented)


@dataclass
class ReasonerState:
    """One step of the propagation: entity distribution plus entity states."""

    P: torch.Tensor  # (E,)
    V: torch.Tensor  # (E, d_h)
    step: int = 0


@dataclass
class ForwardCache:
    """Everything a decode or scoring pass needs from one forward run."""

    direction: str
    seeds: tuple[int, ...]
    v_q: torch.Tensor  # (d_h,)
    omegas: torch.Tensor  # (n, d_h)
    P: list[torch.Tensor]  # n+1 tensors (E,), P[0] uniform on seeds
    V: list[torch.Tensor]  # n+1 tensors (E, d_h)
    m_rel: list[torch.Tensor]  # n tensors (R_aug, d_h)

    @property
    def final_distribution(self) -> torch.Tensor:
        return self.P[-1]


class Reasoner(nn.Module):
    """Parameters and ops; see module docstring for the step semantics."""

    def __init__(
        self,
        num_relations_augmented: int,
        wordvec: WordVectorTable,
        hidden_dim: int = 100,
        seed: int = 0,
        entity_vocab_hash: str = "",
        relation_vocab_hash: str = "",
    ):
        super().__init__()
        self.num_relations_augmented = num_relations_augmented
        self.hidden_dim = hidden_dim
        self.word_dim = wordvec.dim
        self.seed = seed
        self.entity_vocab_hash = entity_vocab_hash
        self.relation_vocab_hash = relation_vocab_hash
        self.wordvec = wordvec

        d = hidden_dim
        self.relation_emb = nn.Parameter(torch.empty(num_relations_augmented, d))
        self.W1 = nn.Parameter(torch.empty(d, d))
        self.W2 = nn.Parameter(torch.empty(d, d))
        self.ffn = nn.Sequential(nn.Linear(2 * d, d), nn.ReLU(), nn.Linear(d, d))
        self.w_out = nn.Parameter(torch.empty(d))
        self.encoder = nn.LSTM(self.word_dim, d, batch_first=True)
        self.decoder = nn.LSTMCell(d, d)

        self.double()
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for p in self.parameters():
                p.uniform_(-0.08, 0.08, generator=gen)
        self._tensors_cache: "weakref.WeakKeyDictionary[KnowledgeGraph, GraphTensors]" = (
            weakref.WeakKeyDictionary()
        )

    @classmethod
    def for_graph(
        cls,
        kg: KnowledgeGraph,
        wordvec: WordVectorTable,
        hidden_dim: int = 100,
        seed: int = 0,
    ) -> "Reasoner":
        return cls(
            kg.num_relations_augmented,
            wordvec,
            hidden_dim=hidden_dim,
            seed=seed,
            entity_vocab_hash=vocab_hash(kg.entities),
            relation_vocab_hash=vocab_hash(kg.relations),
        )

    # ------------------------------------------------------------------
    # graph binding
    # ------------------------------------------------------------------

    def graph_tensors(self, kg: KnowledgeGraph) -> GraphTensors:
        tensors = self._tensors_cache.get(kg)
        if tensors is None or tensors.num_relations != kg.num_relations_augmented:
            tensors = GraphTensors.from_graph(kg)
            self._tensors_cache[kg] = tensors
        if tensors.num_relations != self.num_relations_augmented:
            raise DimensionMismatch(
                f"graph has {tensors.num_relations} augmented relations, "
                f"model expects {self.num_relations_augmented}"
            )
        return tensors

    # ------------------------------------------------------------------
    # question encoding
    # ------------------------------------------------------------------

    def _embed_questions(self, questions: list[str]) -> tuple[torch.Tensor, torch.Tensor]:
        token_mats = []
        for q in questions:
            tokens = tokenize(q)
            if not tokens:
                raise ValueError(f"question has no tokens: {q!r}")
            token_mats.append(torch.from_numpy(np.ascontiguousarray(self.wordvec.embed(tokens))))
        lengths = torch.tensor([m.shape[0] for m in token_mats], dtype=torch.long)
        padded = nn.utils.rnn.pad_sequence(token_mats, batch_first=True)
        if padded.shape[-1] != self.word_dim:
            raise DimensionMismatch(
                f"word vectors have dim {padded.shape[-1]}, model expects {self.word_dim}"
            )
        return padded, lengths

    def encode_questions(self, questions: list[str], n: int) -> tuple[torch.Tensor, torch.Tensor]:
        """Batch encode: question vectors (B, d_h), instructions (B, n, d_h)."""
        padded, lengths = self._embed_questions(questions)
        packed = nn.utils.rnn.pack_padded_sequence(
            padded, lengths, batch_first=True, enforce_sorted=False
        )
        _, (h_n, c_n) = self.encoder(packed)
        v_q, c = h_n[0], c_n[0]  # (B, d_h)
        h = v_q
        omegas = []
        for _ in range(n):
            h, c = self.decoder(v_q, (h, c))
            omegas.append(h)
        return v_q, torch.stack(omegas, dim=1)

    def encode_question(self, question: str, n: int) -> tuple[torch.Tensor, torch.Tensor]:
        """Single question: (d_h,) vector plus (n, d_h) instructions."""
        v_q, omegas = self.encode_questions([question], n)
        return v_q[0], omegas[0]

    # ------------------------------------------------------------------
    # entity initialization and propagation
    # ------------------------------------------------------------------

    def init_entity_embeddings(self, kg: KnowledgeGraph) -> torch.Tensor:
        """Relation-sum init: entities with no incident arcs get sigmoid(0)."""
        tensors = self.graph_tensors(kg)
        real = tensors.rel < kg.stay_id  # self-loops stay out of the init sum
        sums = torch.zeros(tensors.num_entities, self.hidden_dim, dtype=torch.float64)
        sums.index_add_(0, tensors.src[real], self.relation_emb[tensors.rel[real]])
        return torch.sigmoid(sums @ self.W1)

    def _match_messages(self, omegas: torch.Tensor) -> torch.Tensor:
        """Gate relation embeddings per instruction: (..., R_aug, d_h)."""
        proj = self.relation_emb @ self.W2.T  # (R_aug, d_h)
        return torch.sigmoid(omegas.unsqueeze(-2) * proj)

    def _propagate_batch(
        self,
        P: torch.Tensor,  # (B, E)
        V: torch.Tensor,  # (B, E, d_h)
        m_rel: torch.Tensor,  # (B, R_aug, d_h) or (R_aug, d_h)
        tensors: GraphTensors,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        B, E = P.shape
        R = tensors.num_relations
        if m_rel.dim() == 2:
            m_rel = m_rel.unsqueeze(0).expand(B, -1, -1)
        # mass[b, r, e] = sum of P[b, src] over arcs (src, r, e)
        flat = tensors.rel * E + tensors.dst  # (A,)
        contrib = P[:, tensors.src]  # (B, A)
        mass = P.new_zeros(B, R * E)
        mass.index_add_(1, flat, contrib)
        mass = mass.view(B, R, E)
        v_tilde = torch.einsum("bre,brd->bed", mass, m_rel)  # (B, E, d_h)
        V_new = self.ffn(torch.cat([V, v_tilde], dim=-1))
        P_new = torch.softmax(V_new @ self.w_out, dim=-1)
        return P_new, V_new

    def reasoning_step(
        self,
        kg: KnowledgeGraph,
        state: ReasonerState,
        omega: torch.Tensor,
    ) -> ReasonerState:
        """Advance one step; the output distribution is a fresh softmax."""
        tensors = self.graph_tensors(kg)
        P = state.P
        if P.shape != (tensors.num_entities,):
            raise DimensionMismatch(
                f"state distribution has shape {tuple(P.shape)}, "
                f"graph has {tensors.num_entities} entities"
            )
        total = float(P.detach().sum())
        if abs(total - 1.0) > _NORM_TOL or bool((P.detach() < -1e-9).any()):
            raise NotNormalized(f"state distribution sums to {total}")
        m_rel = self._match_messages(omega)  # (R_aug, d_h)
        P_new, V_new = self._propagate_batch(
            P.unsqueeze(0), state.V.unsqueeze(0), m_rel, tensors
        )
        return ReasonerState(P=P_new[0], V=V_new[0], step=state.step + 1)

    # ------------------------------------------------------------------
    # full passes
    # ------------------------------------------------------------------

    def _seed_distribution(
        self, seeds_per_item: list[tuple[int, ...]], num_entities: int
    ) -> torch.Tensor:
        P0 = torch.zeros(len(seeds_per_item), num_entities, dtype=torch.float64)
        for b, seeds in enumerate(seeds_per_item):
            if not seeds:
                raise UnknownEntity("empty seed set")
            for e in seeds:
                if not 0 <= e < num_entities:
                    raise UnknownEntity(str(e))
            P0[b, list(seeds)] = 1.0 / len(seeds)
        return P0

    def forward_batch(
        self,
        kg: KnowledgeGraph,
        questions: list[str],
        seeds_per_item: list[tuple[int, ...]],
        n: int,
    ) -> list[torch.Tensor]:
        """Distributions [P^0 .. P^n], each (B, E).  Used by training."""
        tensors = self.graph_tensors(kg)
        _, omegas = self.encode_questions(questions, n)  # (B, n, d_h)
        P = self._seed_distribution(seeds_per_item, tensors.num_entities)
        V = self.init_entity_embeddings(kg).unsqueeze(0).expand(len(questions), -1, -1)
        out = [P]
        for i in range(n):
            m_rel = self._match_messages(omegas[:, i, :])  # (B, R_aug, d_h)
            P, V = self._propagate_batch(P, V, m_rel, tensors)
            out.append(P)
        return out

    def forward_pass(
        self,
        kg: KnowledgeGraph,
        question: str,
        seeds: tuple[int, ...],
        n: int,
        direction: str = "forward",
    ) -> ForwardCache:
        """Run n steps from the seed set; keeps per-step products for decoding.

        ``direction`` only documents which end seeded the pass; the arc
        set already contains every inverse, so no re-wiring is needed.
        """
        if direction not in ("forward", "backward"):
            raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
        tensors = self.graph_tensors(kg)
        v_q, omegas = self.encode_question(question, n)
        P = self._seed_distribution([tuple(seeds)], tensors.num_entities)
        V = self.init_entity_embeddings(kg).unsqueeze(0)
        Ps = [P[0]]
        Vs = [V[0]]
        ms = []
        for i in range(n):
            m_rel = self._match_messages(omegas[i])  # (R_aug, d_h)
            P, V = self._propagate_batch(P, V, m_rel, tensors)
            Ps.append(P[0])
            Vs.append(V[0])
            ms.append(m_rel)
        return ForwardCache(
            direction=direction,
            seeds=tuple(seeds),
            v_q=v_q,
            omegas=omegas,
            P=Ps,
            V=Vs,
            m_rel=ms,
        )
