"""Shared fixtures: small hand-built graphs used across the suite."""

from __future__ import annotations

import numpy as np
import pytest

from kgreason.kg import ingest_triples
from kgreason.text import WordVectorTable

# Populated by the acceptance tests; echoed after the run so the verdict
# for each criterion is visible in one place.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


DIAMOND_TRIPLES = [
    ("alpha", "feeds", "beta"),
    ("alpha", "feeds", "gamma"),
    ("beta", "drains", "delta"),
    ("gamma", "drains", "delta"),
    ("delta", "links", "omega"),
    ("alpha", "links", "omega"),
]


@pytest.fixture
def diamond_kg():
    """Two equal-length routes alpha->delta plus a shortcut alpha->omega."""
    return ingest_triples(DIAMOND_TRIPLES)


CHAIN_TRIPLES = [
    ("n0", "step", "n1"),
    ("n1", "step", "n2"),
    ("n2", "step", "n3"),
]


@pytest.fixture
def chain_kg():
    return ingest_triples(CHAIN_TRIPLES)


@pytest.fixture
def tiny_wordvec():
    rng = np.random.default_rng(7)
    words = [
        "which", "route", "runs", "from", "alpha", "beta", "gamma", "delta",
        "omega", "to", "what", "does", "feed", "drain", "link", "n0", "n1",
        "n2", "n3", "step", "one", "two", "three",
    ]
    return WordVectorTable(
        {w: rng.uniform(-1.0, 1.0, 8) for w in words}, dim=8
    )
