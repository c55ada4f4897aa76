"""Final answer step: assemble the guidance prompt, query, parse."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Sequence

from .kg.qa import QAInstance
from .lm import LMClient

REASONING_PROMPT = (
    "Instructions:\n"
    "Please use the reasoning paths provided below to answer the question. "
    "The reasoning paths are listed in order of importance, with the first being "
    "the most important. Your task is to derive the simplest possible answer and "
    "return all potential answers as a list.\n"
    "\n"
    "Reasoning Paths:\n"
    "{paths}\n"
    "\n"
    "Question:\n"
    "{question}"
)

EMPTY_PATHS_PLACEHOLDER = "(no reasoning paths retrieved)"


@dataclass(frozen=True)
class PromptBundle:
    text: str
    path_count: int
    question_id: str = ""


@dataclass(frozen=True)
class AnswerSet:
    answers: tuple[str, ...]
    raw: str
    parse_failed: bool = False
    prompt: str = ""


def _path_text(item) -> str:
    text = getattr(item, "text", None)
    return text if text is not None else str(item)


def build_reasoning_prompt(
    question: str,
    ranked_paths: Sequence,
    question_id: str = "",
) -> PromptBundle:
    """Paths go in rank order, one per line; an empty list gets the
    placeholder so the template shape never changes."""
    lines = [_path_text(p) for p in ranked_paths]
    block = "\n".join(lines) if lines else EMPTY_PATHS_PLACEHOLDER
    return PromptBundle(
        text=REASONING_PROMPT.format(paths=block, question=question),
        path_count=len(lines),
        question_id=question_id,
    )


# ----------------------------------------------------------------------
# output parsing
# ----------------------------------------------------------------------

_BRACKET_RE = re.compile(r"\[[^\[\]]*\]", re.DOTALL)
_BULLET_RE = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s*")


def _clean(item: str) -> str:
    return item.strip().strip("\"'").strip()


def _dedupe(items: list[str]) -> tuple[str, ...]:
    seen = set()
    out = []
    for item in items:
        if item and item not in seen:
            seen.add(item)
            out.append(item)
    return tuple(out)


def _try_json_array(raw: str) -> list[str] | None:
    for match in _BRACKET_RE.finditer(raw):
        try:
            value = json.loads(match.group(0))
        except json.JSONDecodeError:
            continue
        if isinstance(value, list):
            return [_clean(str(v)) for v in value]
    return None


def _try_bracketed(raw: str) -> list[str] | None:
    match = _BRACKET_RE.search(raw)
    if match is None:
        return None
    inner = match.group(0)[1:-1]
    return [_clean(part) for part in inner.split(",")]


def _try_answer_cue(raw: str) -> list[str] | None:
    lines = raw.splitlines()
    cue_idx = None
    for i, line in enumerate(lines):
        if "answer" in line.casefold():
            cue_idx = i
    if cue_idx is None:
        return None
    tail = [
        _clean(_BULLET_RE.sub("", line)) for line in lines[cue_idx + 1 :] if line.strip()
    ]
    if tail:
        return tail
    cue_line = lines[cue_idx]
    if ":" in cue_line:
        after = cue_line.split(":", 1)[1]
        return [_clean(part) for part in after.split(",")]
    return None


def parse_answers(raw: str) -> AnswerSet:
    """Best-effort list extraction; failures flag instead of raising."""
    for extractor in (_try_json_array, _try_bracketed, _try_answer_cue):
        items = extractor(raw)
        if items:
            answers = _dedupe(items)
            if answers:
                return AnswerSet(answers=answers, raw=raw)
    return AnswerSet(answers=(), raw=raw, parse_failed=True)


def answer(
    instance: QAInstance,
    ranked_paths: Sequence,
    lm: LMClient,
) -> AnswerSet:
    """One deterministic completion over the guidance prompt.

    Malformed model output never raises; backend unavailability does.
    """
    bundle = build_reasoning_prompt(instance.question, ranked_paths, instance.id)
    completion = lm.generate(bundle.text, temperature=0.0, num_return=1)[0]
    parsed = parse_answers(completion)
    return AnswerSet(
        answers=parsed.answers,
        raw=completion,
        parse_failed=parsed.parse_failed,
        prompt=bundle.text,
    )
