"""Training loop for the structural reasoner."""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field

import torch

from ..errors import EmptyDataset
from ..kg.graph import KnowledgeGraph
from ..kg.qa import QAInstance
from ..text import WordVectorTable
from .loss import bidirectional_loss
from .model import Reasoner

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 80
    batch_size: int = 40
    learning_rate: float = 4e-4
    steps: int = 2  # reasoning hops n
    hidden_dim: int = 100
    seed: int = 0

    def validate(self) -> None:
        if self.epochs <= 0 or self.batch_size <= 0 or self.steps <= 0:
            raise ValueError("epochs, batch_size and steps must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.hidden_dim <= 0:
            raise ValueError("hidden_dim must be positive")


@dataclass
class TrainLog:
    epoch_losses: list[float] = field(default_factory=list)
    skipped_instances: list[str] = field(default_factory=list)
    seconds: float = 0.0


def _uniform_targets(
    idx_sets: list[tuple[int, ...]], num_entities: int
) -> torch.Tensor:
    T = torch.zeros(len(idx_sets), num_entities, dtype=torch.float64)
    for b, idxs in enumerate(idx_sets):
        T[b, list(idxs)] = 1.0 / len(idxs)
    return T


def usable_instances(instances: list[QAInstance]) -> tuple[list[QAInstance], list[str]]:
    """Keep instances with at least one linked question and answer entity."""
    kept, skipped = [], []
    for inst in instances:
        if inst.question_entities and inst.answer_entities:
            kept.append(inst)
        else:
            skipped.append(inst.id)
    return kept, skipped


def train(
    kg: KnowledgeGraph,
    instances: list[QAInstance],
    wordvec: WordVectorTable,
    cfg: TrainConfig,
) -> tuple[Reasoner, TrainLog]:
    """Adam over the bidirectional loss; all randomness flows from cfg.seed."""
    cfg.validate()
    kept, skipped = usable_instances(instances)
    if not kept:
        raise EmptyDataset("no instance has both question and answer entities linked")
    log = TrainLog(skipped_instances=skipped)
    if skipped:
        logger.info("skipping %d unlinked instances", len(skipped))

    model = Reasoner.for_graph(kg, wordvec, hidden_dim=cfg.hidden_dim, seed=cfg.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    order_rng = random.Random(cfg.seed)
    start = time.monotonic()

    for epoch in range(cfg.epochs):
        order = list(range(len(kept)))
        order_rng.shuffle(order)
        epoch_loss = 0.0
        batches = 0
        for lo in range(0, len(order), cfg.batch_size):
            batch = [kept[i] for i in order[lo : lo + cfg.batch_size]]
            questions = [b.question for b in batch]
            q_seeds = [b.question_entities for b in batch]
            a_seeds = [b.answer_entities for b in batch]

            pf = model.forward_batch(kg, questions, q_seeds, cfg.steps)
            pb = model.forward_batch(kg, questions, a_seeds, cfg.steps)
            pf_star = _uniform_targets(a_seeds, kg.num_entities)
            pb_star = _uniform_targets(q_seeds, kg.num_entities)
            loss = bidirectional_loss(pf[1:], pb[1:], pf_star, pb_star)

            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach())
            batches += 1
        mean_loss = epoch_loss / max(batches, 1)
        log.epoch_losses.append(mean_loss)
        if (epoch + 1) % 10 == 0 or epoch == 0:
            logger.info("epoch %d/%d loss %.6f", epoch + 1, cfg.epochs, mean_loss)
    log.seconds = time.monotonic() - start
    return model, log


def hits_at_1_structural(
    model: Reasoner,
    kg: KnowledgeGraph,
    instances: list[QAInstance],
    n: int,
) -> float:
    """Fraction of instances whose argmax final distribution is a gold entity."""
    kept, _ = usable_instances(instances)
    if not kept:
        raise EmptyDataset("no scorable instances")
    hits = 0
    with torch.no_grad():
        dists = model.forward_batch(
            kg,
            [i.question for i in kept],
            [i.question_entities for i in kept],
            n,
        )[-1]
    for row, inst in zip(dists, kept):
        if int(row.argmax()) in inst.answer_entities:
            hits += 1
    return hits / len(kept)
