"""Label-based QA metrics: Hits@1 and macro-averaged F1."""

from __future__ import annotations

import re
import string
from typing import Iterable, Sequence

_WS_RE = re.compile(r"\s+")
_PUNCT = string.punctuation


def normalize_label(label: str) -> str:
    """Casefold, collapse whitespace, strip surrounding punctuation."""
    text = _WS_RE.sub(" ", label.strip()).casefold()
    return text.strip(_PUNCT + " ")


def _normalized_set(labels: Iterable[str]) -> set[str]:
    return {n for n in (normalize_label(l) for l in labels) if n}


def hits_at_1(predictions: Sequence[str], gold: Sequence[str]) -> float:
    """1.0 iff the first prediction matches any gold label."""
    if not predictions:
        return 0.0
    top = normalize_label(predictions[0])
    return 1.0 if top and top in _normalized_set(gold) else 0.0


def f1(predictions: Sequence[str], gold: Sequence[str]) -> float:
    """Set F1 over normalized labels; empty predictions score 0."""
    pred_set = _normalized_set(predictions)
    gold_set = _normalized_set(gold)
    if not pred_set or not gold_set:
        return 0.0
    overlap = len(pred_set & gold_set)
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_set)
    recall = overlap / len(gold_set)
    return 2 * precision * recall / (precision + recall)
