"""Guidance-prompt assembly and answer parsing."""

from __future__ import annotations

import pytest

from kgreason.answering import (
    EMPTY_PATHS_PLACEHOLDER,
    REASONING_PROMPT,
    AnswerSet,
    answer,
    build_reasoning_prompt,
    parse_answers,
)
from kgreason.kg.qa import QAInstance
from kgreason.lm import LMUnavailable, MockLMClient, MockRule


# ----------------------------------------------------------------------
# prompt assembly
# ----------------------------------------------------------------------

GOLDEN_PROMPT = (
    "Instructions:\n"
    "Please use the reasoning paths provided below to answer the question. "
    "The reasoning paths are listed in order of importance, with the first being "
    "the most important. Your task is to derive the simplest possible answer and "
    "return all potential answers as a list.\n"
    "\n"
    "Reasoning Paths:\n"
    "alpha -> feeds -> beta -> drains -> delta\n"
    "alpha -> links -> omega\n"
    "\n"
    "Question:\n"
    "which route runs from alpha to delta"
)


def test_prompt_bytes_are_exactly_pinned():
    bundle = build_reasoning_prompt(
        "which route runs from alpha to delta",
        [
            "alpha -> feeds -> beta -> drains -> delta",
            "alpha -> links -> omega",
        ],
        question_id="q1",
    )
    assert bundle.text == GOLDEN_PROMPT
    assert bundle.path_count == 2
    assert bundle.question_id == "q1"


def test_prompt_preserves_rank_order():
    a = build_reasoning_prompt("q", ["first", "second", "third"]).text
    assert a.index("first") < a.index("second") < a.index("third")


def test_prompt_empty_paths_uses_placeholder():
    bundle = build_reasoning_prompt("q", [])
    assert EMPTY_PATHS_PLACEHOLDER in bundle.text
    assert bundle.path_count == 0
    # template shape identical: same header/footer around the block
    assert bundle.text == REASONING_PROMPT.format(
        paths=EMPTY_PATHS_PLACEHOLDER, question="q"
    )


def test_prompt_accepts_scored_path_objects():
    class Row:
        text = "alpha -> feeds -> beta"

    bundle = build_reasoning_prompt("q", [Row()])
    assert "alpha -> feeds -> beta" in bundle.text
    assert bundle.path_count == 1


# ----------------------------------------------------------------------
# parsing
# ----------------------------------------------------------------------


@pytest.mark.parametrize(
    "raw,want",
    [
        ('["Ukrainian Language"]', ("Ukrainian Language",)),
        ('["a", "b", "a"]', ("a", "b")),
        ("The answers are: [Kyiv, Lviv]", ("Kyiv", "Lviv")),
        ("[ 'x' , 'y' ]", ("x", "y")),
        ("Answer: Paris", ("Paris",)),
        ("The final answer is: alpha, beta", ("alpha", "beta")),
        ("Answers:\n- one\n- two", ("one", "two")),
        ("answers:\n1. first\n2) second", ("first", "second")),
        ("Some reasoning...\nANSWER: 42", ("42",)),
    ],
)
def test_parse_answers_formats(raw, want):
    result = parse_answers(raw)
    assert result.answers == want
    assert not result.parse_failed
    assert result.raw == raw


def test_parse_prefers_json_over_cue():
    raw = 'Answer: wrong\n["right"]'
    assert parse_answers(raw).answers == ("right",)


def test_parse_json_array_anywhere_in_prose():
    raw = 'Based on the paths, I conclude ["Ukrainian Language"] is correct.'
    assert parse_answers(raw).answers == ("Ukrainian Language",)


@pytest.mark.parametrize("raw", ["", "no list here", "[]", "answer:"])
def test_parse_failures_flag_not_raise(raw):
    result = parse_answers(raw)
    assert result.parse_failed
    assert result.answers == ()
    assert result.raw == raw


def test_parse_uses_last_answer_cue():
    raw = "answer: not this one\nmore text\nAnswer: final"
    assert parse_answers(raw).answers == ("final",)


# ----------------------------------------------------------------------
# end-to-end answer()
# ----------------------------------------------------------------------


def make_instance():
    return QAInstance(
        id="q1",
        question="which route runs from alpha to delta",
        question_entities=("alpha",),
        answer_entities=("delta",),
        answer_labels=("delta",),
    )


def test_answer_round_trip():
    lm = MockLMClient(
        rules=[MockRule(contains=("Reasoning Paths",), responses=('["delta"]',))],
        default_response="[]",
    )
    result = answer(make_instance(), ["alpha -> feeds -> beta -> drains -> delta"], lm)
    assert isinstance(result, AnswerSet)
    assert result.answers == ("delta",)
    assert not result.parse_failed
    assert "alpha -> feeds -> beta -> drains -> delta" in result.prompt
    assert lm.call_history[0]["prompt"] == result.prompt


def test_answer_requests_one_completion():
    lm = MockLMClient(default_response='["x"]')
    answer(make_instance(), [], lm)
    call = lm.call_history[0]
    assert call["op"] == "generate"
    assert call["num_return"] == 1


def test_answer_malformed_output_flags():
    lm = MockLMClient(default_response="I refuse to answer in a list.")
    result = answer(make_instance(), ["p"], lm)
    assert result.parse_failed
    assert result.answers == ()
    assert result.raw == "I refuse to answer in a list."


def test_answer_backend_failure_raises():
    lm = MockLMClient(
        rules=[MockRule(contains=("Reasoning Paths",), responses=(), error="down")]
    )
    with pytest.raises(LMUnavailable):
        answer(make_instance(), ["p"], lm)
