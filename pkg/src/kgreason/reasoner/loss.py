"""Bidirectional distribution loss for the structural reasoner.

The supervised part anchors the final forward/backward distributions to
uniform targets over the gold answer and question entities; a symmetric
divergence ties intermediate steps of the two passes together so the
paths agree hop by hop.
"""

from __future__ import annotations

from typing import Sequence

import torch

from ..errors import NotNormalized

EPS = 1e-12
_NORM_TOL = 1e-6


def _check_distribution(t: torch.Tensor, name: str) -> None:
    checked = t.detach()
    sums = checked.sum(dim=-1)
    if bool((sums - 1.0).abs().max() > _NORM_TOL) or bool((checked < -1e-9).any()):
        raise NotNormalized(f"{name} is not a probability distribution")


def kl_divergence(target: torch.Tensor, pred: torch.Tensor, eps: float = EPS) -> torch.Tensor:
    """KL(target || pred) with epsilon-floored logs, summed over entities."""
    return (target * (torch.log(target + eps) - torch.log(pred + eps))).sum(dim=-1)


def js_divergence(p: torch.Tensor, q: torch.Tensor, eps: float = EPS) -> torch.Tensor:
    mid = 0.5 * (p + q)
    return 0.5 * kl_divergence(p, mid, eps) + 0.5 * kl_divergence(q, mid, eps)


def bidirectional_loss(
    pf_seq: Sequence[torch.Tensor],
    pb_seq: Sequence[torch.Tensor],
    pf_star: torch.Tensor,
    pb_star: torch.Tensor,
) -> torch.Tensor:
    """Final-step KL terms plus step-aligned symmetric divergence.

    ``pf_seq``/``pb_seq`` are the post-step distributions P^1..P^n of the
    forward and backward passes (targets first in each KL term); step i
    of one pass is compared with step n-i of the other.  Scalar per batch
    row, averaged.
    """
    n = len(pf_seq)
    if n == 0 or len(pb_seq) != n:
        raise ValueError("need equal-length non-empty step sequences")
    for name, t in (("pf_star", pf_star), ("pb_star", pb_star)):
        _check_distribution(t, name)
    for i, t in enumerate(pf_seq):
        _check_distribution(t, f"pf_seq[{i}]")
    for i, t in enumerate(pb_seq):
        _check_distribution(t, f"pb_seq[{i}]")

    loss = kl_divergence(pf_star, pf_seq[-1]) + kl_divergence(pb_star, pb_seq[-1])
    for i in range(1, n):
        loss = loss + js_divergence(pf_seq[i - 1], pb_seq[n - i - 1])
    return loss.mean()
