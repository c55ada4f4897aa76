"""QA instances and the JSON-lines dataset reader."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from ..errors import MalformedRecord
from .graph import KnowledgeGraph


@dataclass(frozen=True)
class QAInstance:
    """One question with linked entities and gold answers.

    Entity linking is best-effort: labels missing from the graph
    vocabulary are kept in the ``unresolved_*`` fields so instances are
    flagged rather than dropped.
    """

    id: str
    question: str
    question_entities: tuple[int, ...]
    answer_entities: tuple[int, ...]
    answer_labels: tuple[str, ...]
    unresolved_question_entities: tuple[str, ...] = ()
    unresolved_answers: tuple[str, ...] = ()

    @property
    def question_unlinked(self) -> bool:
        return not self.question_entities

    @property
    def answers_unlinked(self) -> bool:
        return not self.answer_entities


def _require(record: dict, key: str, line_no: int, kind: type) -> object:
    if key not in record:
        raise MalformedRecord(line_no, f"missing key {key!r}")
    value = record[key]
    if not isinstance(value, kind):
        raise MalformedRecord(line_no, f"key {key!r} must be {kind.__name__}")
    return value


def _string_list(record: dict, key: str, line_no: int) -> list[str]:
    value = _require(record, key, line_no, list)
    if not value or not all(isinstance(v, str) and v.strip() for v in value):
        raise MalformedRecord(line_no, f"key {key!r} must be a non-empty list of strings")
    return value


def instance_from_record(record: dict, kg: KnowledgeGraph, line_no: int = 0) -> QAInstance:
    ident = _require(record, "id", line_no, str)
    question = _require(record, "question", line_no, str)
    if not question.strip():
        raise MalformedRecord(line_no, "question is empty")
    q_labels = _string_list(record, "question_entities", line_no)
    answers = _string_list(record, "answers", line_no)

    q_ids, q_missing = [], []
    for label in q_labels:
        if label in kg.entity_ids:
            q_ids.append(kg.entity_ids[label])
        else:
            q_missing.append(label)

    # explicit answer entities win; otherwise link the answer strings
    if "answer_entities" in record:
        a_labels = _string_list(record, "answer_entities", line_no)
    else:
        a_labels = answers
    a_ids, a_missing = [], []
    for label in a_labels:
        if label in kg.entity_ids:
            a_ids.append(kg.entity_ids[label])
        else:
            a_missing.append(label)

    seen = set()
    answer_labels = tuple(a for a in answers if not (a in seen or seen.add(a)))
    return QAInstance(
        id=ident,
        question=question,
        question_entities=tuple(sorted(set(q_ids))),
        answer_entities=tuple(sorted(set(a_ids))),
        answer_labels=answer_labels,
        unresolved_question_entities=tuple(q_missing),
        unresolved_answers=tuple(a_missing),
    )


def load_dataset(path: str, kg: KnowledgeGraph) -> list[QAInstance]:
    """Read QA JSON-lines; every malformed line is a hard error."""
    instances = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc}") from None
            if not isinstance(record, dict):
                raise MalformedRecord(line_no, "record must be a JSON object")
            instances.append(instance_from_record(record, kg, line_no))
    return instances


def save_dataset(instances: Sequence[dict], path: str) -> None:
    """Write raw QA records as JSON-lines (fixture/export helper)."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in instances:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
