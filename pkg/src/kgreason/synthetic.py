"""Deterministic synthetic worlds for tests, demos, and benchmarks.

Three families:

* a planted-rule graph whose questions name a two-hop relational rule,
  with answers unique by construction (functional rule relations);
* a small geography world wired to a scripted mock LM, written to disk
  as a complete runnable workspace;
* a movie graph with nine relation types and one-hop questions.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

import numpy as np

from .kg.graph import KnowledgeGraph, build_graph
from .kg.qa import QAInstance, instance_from_record
from .text import WordVectorTable

# ----------------------------------------------------------------------
# planted two-hop rules
# ----------------------------------------------------------------------

RULE_PHRASES = (
    (
        "which harbour takes deliveries routed out of {s}",
        "name the harbour fed by shipments leaving {s}",
        "deliveries from {s} finally reach which harbour",
        "the freight sent away from {s} docks at which harbour",
    ),
    (
        "which depot stores the cargo gathered from {s}",
        "name the depot holding goods collected at {s}",
        "cargo gathered from {s} ends up stored in which depot",
        "the parcels picked up at {s} sit in which depot",
    ),
    (
        "which market sells the goods produced at {s}",
        "name the market offering wares made in {s}",
        "goods produced at {s} are finally sold at which market",
        "the output crafted in {s} reaches which market stall",
    ),
    (
        "which station receives passengers boarding at {s}",
        "name the station welcoming travellers departing {s}",
        "passengers boarding at {s} finally arrive at which station",
        "the riders leaving {s} step off at which station",
    ),
)


@dataclass
class PlantedFixture:
    kg: KnowledgeGraph
    train: list[QAInstance]
    test: list[QAInstance]
    wordvec: WordVectorTable
    records: list[tuple[str, str, str]]


def _random_wordvec(tokens: set[str], dim: int, seed: int) -> WordVectorTable:
    rng = np.random.default_rng(seed)
    vectors = {t: rng.uniform(-1.0, 1.0, size=dim) for t in sorted(tokens)}
    return WordVectorTable(vectors, dim)


def build_planted_fixture(
    seed: int = 11,
    num_subjects: int = 100,
    mids_per_rule: int = 12,
    num_answers: int = 50,
    train_subjects: int = 75,
    num_noise_edges: int = 200,
    word_dim: int = 16,
) -> PlantedFixture:
    """Four two-hop rules over a three-layer graph.

    Rule k follows relation 2k then 2k+1.  Subjects and mid-layer
    entities are partitioned by rule (subject i carries rule i mod 4),
    and both rule relations are functional per source entity, so every
    question has exactly one answer reached by exactly one rule chain.
    Noise edges on four extra relations force the reasoner to select
    rule relations rather than diffuse everywhere.  Each question is
    asked in four phrasings; test questions use subjects never seen in
    training, which probes whether the rule itself was learned rather
    than memorized endpoints.
    """
    subjects = [f"s{i:03d}" for i in range(num_subjects)]
    mids = [f"m{i:03d}" for i in range(4 * mids_per_rule)]
    answers = [f"a{i:03d}" for i in range(num_answers)]
    relations = [f"rel_{chr(ord('a') + i)}" for i in range(12)]

    def rule_mid(si: int, k: int) -> int:
        return 4 * ((si * 7 + k * 13) % mids_per_rule) + k

    def mid_answer(mi: int, k: int) -> int:
        return (mi * 11 + k * 17) % num_answers

    records: list[tuple[str, str, str]] = []
    for si, s in enumerate(subjects):
        k = si % 4
        mi = rule_mid(si, k)
        records.append((s, relations[2 * k], mids[mi]))
        records.append((mids[mi], relations[2 * k + 1], answers[mid_answer(mi, k)]))
    records = sorted(set(records))

    all_entities = subjects + mids + answers
    rng = random.Random(seed)
    noise = set()
    while len(noise) < num_noise_edges:
        h = rng.choice(all_entities)
        t = rng.choice(all_entities)
        r = relations[8 + rng.randrange(4)]
        if h != t:
            noise.add((h, r, t))
    records.extend(sorted(noise))

    kg = build_graph(records, entity_order=all_entities, relation_order=relations)

    def make_instances(subject_ids: list[int]) -> list[QAInstance]:
        out = []
        for si in subject_ids:
            k = si % 4
            gold = answers[mid_answer(rule_mid(si, k), k)]
            for v, phrase in enumerate(RULE_PHRASES[k]):
                record = {
                    "id": f"q-{si:03d}-{v}",
                    "question": phrase.format(s=subjects[si]),
                    "question_entities": [subjects[si]],
                    "answers": [gold],
                }
                out.append(instance_from_record(record, kg))
        return out

    train = make_instances(list(range(train_subjects)))
    test = make_instances(list(range(train_subjects, num_subjects)))

    tokens: set[str] = set()
    for group in RULE_PHRASES:
        for phrase in group:
            tokens |= set(phrase.replace("{s}", " ").lower().split())
    tokens |= {e.lower() for e in all_entities}
    wordvec = _random_wordvec(tokens, word_dim, seed + 1)
    return PlantedFixture(kg=kg, train=train, test=test, wordvec=wordvec, records=records)


# ----------------------------------------------------------------------
# case-study graph
# ----------------------------------------------------------------------

ZERKALO_QUESTION = (
    "The newspaper Zerkalo Nedeli is circulated in an area that has what "
    "as the official language?"
)
ZERKALO_ANSWER = "Ukrainian Language"

_ZERKALO_TRIPLES = [
    ("Zerkalo Nedeli", "periodicals.newspaper_circulation_area.newspapers", "Ukraine"),
    ("Ukraine", "location.country.languages_spoken", "Ukrainian Language"),
    ("Zerkalo Nedeli", "book.periodical.language", "Ukrainian Language"),
    ("Zerkalo Nedeli", "book.periodical.language", "Russian Language"),
    ("Zerkalo Nedeli", "book.periodical.language", "English Language"),
]


def build_zerkalo_kg(include_direct_language: bool = True) -> KnowledgeGraph:
    """Five-entity newspaper graph; optionally drop the direct language
    edges so the two-hop circulation chain is the only connection."""
    triples = [
        t
        for t in _ZERKALO_TRIPLES
        if include_direct_language or t[1] != "book.periodical.language"
    ]
    entity_order = [
        "Zerkalo Nedeli",
        "Ukraine",
        "Ukrainian Language",
        "Russian Language",
        "English Language",
    ]
    if not include_direct_language:
        entity_order = ["Zerkalo Nedeli", "Ukraine", "Ukrainian Language"]
    return build_graph(triples, entity_order=entity_order)


def zerkalo_instance(kg: KnowledgeGraph) -> QAInstance:
    return instance_from_record(
        {
            "id": "zerkalo-1",
            "question": ZERKALO_QUESTION,
            "question_entities": ["Zerkalo Nedeli"],
            "answers": [ZERKALO_ANSWER],
        },
        kg,
    )


# ----------------------------------------------------------------------
# runnable toy workspace (geography world + scripted mock LM)
# ----------------------------------------------------------------------

_CITIES = [
    "rivertown", "lakeside", "hillcrest", "stonegate", "mapleford",
    "ashbourne", "fernvale", "goldport", "windmere", "oakhaven",
]
_COUNTRIES = ["valoria", "tessland", "moravia", "quentia", "zephyria"]
_LANGUAGES = ["valorian", "tesser", "moravic", "quentish", "zephyr"]


def _toy_world() -> tuple[list[tuple[str, str, str]], list[dict]]:
    records = []
    for i, city in enumerate(_CITIES):
        records.append((city, "located_in", _COUNTRIES[i % 5]))
    for i, country in enumerate(_COUNTRIES):
        records.append((country, "official_language", _LANGUAGES[i]))
        records.append((country, "borders", _COUNTRIES[(i + 1) % 5]))

    questions = []
    for i, city in enumerate(_CITIES):
        gold = _COUNTRIES[i % 5]
        questions.append(
            {
                "id": f"toy-one-{i:02d}",
                "question": f"which country is {city} located in ?",
                "question_entities": [city],
                "answers": [gold],
                "path": "located_in",
            }
        )
    for i, city in enumerate(_CITIES):
        gold = _LANGUAGES[i % 5]
        questions.append(
            {
                "id": f"toy-two-{i:02d}",
                "question": f"what is the official language of the country containing {city} ?",
                "question_entities": [city],
                "answers": [gold],
                "path": "located_in -> official_language",
            }
        )
    return records, questions


def write_toy_workspace(directory: str, seed: int = 5) -> dict[str, str]:
    """Write a complete runnable workspace: graph, dataset, vectors,
    mock LM script, and pipeline config.  Returns the file paths."""
    import os

    import yaml

    os.makedirs(directory, exist_ok=True)
    records, questions = _toy_world()

    kg_path = os.path.join(directory, "kg.tsv")
    with open(kg_path, "w", encoding="utf-8") as fh:
        fh.write("# toy geography graph\n")
        for h, r, t in records:
            fh.write(f"{h}\t{r}\t{t}\n")

    qa_path = os.path.join(directory, "qa.jsonl")
    with open(qa_path, "w", encoding="utf-8") as fh:
        for q in questions:
            record = {k: v for k, v in q.items() if k != "path"}
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")

    tokens = set()
    for q in questions:
        tokens |= set(q["question"].lower().replace("?", " ").split())
    tokens |= {"located", "in", "official", "language", "borders"}
    tokens |= set(_CITIES) | set(_COUNTRIES) | set(_LANGUAGES)
    rng = np.random.default_rng(seed)
    vec_path = os.path.join(directory, "vectors.txt")
    with open(vec_path, "w", encoding="utf-8") as fh:
        for token in sorted(tokens):
            values = " ".join(f"{v:.6f}" for v in rng.uniform(-1, 1, size=12))
            fh.write(f"{token} {values}\n")

    rules = []
    for q in questions:
        rules.append(
            {
                "contains": [q["question"], "Instructions:"],
                "responses": [json.dumps(q["answers"])],
            }
        )
        rules.append(
            {
                "contains": [q["question"], "Please generate"],
                "responses": [q["path"]],
                "logprob": -0.3,
            }
        )
    mock_path = os.path.join(directory, "mock.yaml")
    with open(mock_path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(
            {"rules": rules, "default_response": "[]", "default_logprob": -2.0},
            fh,
            sort_keys=False,
            allow_unicode=True,
        )

    config = {
        "kg": kg_path,
        "dataset": qa_path,
        "word_vectors": vec_path,
        "output_dir": os.path.join(directory, "out"),
        "seed": 13,
        "structural": {
            "epochs": 25,
            "batch_size": 10,
            "learning_rate": 4.0e-4,
            "steps": 2,
            "hidden_dim": 32,
            "beam": 4,
        },
        "semantic": {"k": 2, "max_hops": 3},
        # the toy reasoner's cosines sit well below the production default
        # threshold, so the demo uses a gate that keeps most paths while
        # still exercising the filter branch
        "rethink": {"lambda1": 0.5, "lambda2": 0.5, "theta": 0.2},
        "lm": {"kind": "mock", "script": mock_path},
    }
    cfg_path = os.path.join(directory, "config.yaml")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config, fh, sort_keys=False)

    return {
        "kg": kg_path,
        "dataset": qa_path,
        "word_vectors": vec_path,
        "mock_script": mock_path,
        "config": cfg_path,
    }


# ----------------------------------------------------------------------
# movie world, one-hop questions over nine relation types
# ----------------------------------------------------------------------


@dataclass
class MovieFixture:
    kg: KnowledgeGraph
    train: list[QAInstance]
    test: list[QAInstance]
    wordvec: WordVectorTable


def build_movie_fixture(seed: int = 23, word_dim: int = 16) -> MovieFixture:
    rng = random.Random(seed)
    movies = [f"film {chr(ord('a') + i // 10)}{i % 10}" for i in range(60)]
    directors = [f"director {i:02d}" for i in range(15)]
    writers = [f"writer {i:02d}" for i in range(15)]
    actors = [f"actor {i:02d}" for i in range(30)]
    genres = [f"genre {i}" for i in range(8)]
    years = [str(1970 + 5 * i) for i in range(10)]
    languages = [f"lang {i}" for i in range(6)]
    tags = [f"tag {i}" for i in range(10)]
    producers = [f"producer {i:02d}" for i in range(10)]
    ratings = [f"rated {c}" for c in "gpkrn"]

    records = []
    assignments = {}
    for i, m in enumerate(movies):
        d = directors[i % 15]
        w = writers[(i * 3) % 15]
        a1, a2 = actors[i % 30], actors[(i * 7 + 1) % 30]
        g = genres[i % 8]
        y = years[i % 10]
        l = languages[i % 6]
        records += [
            (m, "directed_by", d),
            (m, "written_by", w),
            (m, "starred_actors", a1),
            (m, "starred_actors", a2),
            (m, "has_genre", g),
            (m, "release_year", y),
            (m, "in_language", l),
            (m, "has_tag", tags[(i * 5) % 10]),
            (m, "produced_by", producers[i % 10]),
            (m, "has_rating", ratings[(i * 3) % 5]),
        ]
        actors_of = [a1] if a1 == a2 else [a1, a2]
        assignments[m] = {
            "directed_by": [d],
            "written_by": [w],
            "starred_actors": actors_of,
            "release_year": [y],
            "in_language": [l],
        }

    kg = build_graph(records)

    templates = {
        "directed_by": "who directed the movie {m} ?",
        "written_by": "who wrote the movie {m} ?",
        "starred_actors": "which actors starred in the movie {m} ?",
        "release_year": "in which year was the movie {m} released ?",
        "in_language": "in what language is the movie {m} ?",
    }
    pool = []
    for m in movies:
        for rel, template in templates.items():
            pool.append(
                {
                    "id": f"mv-{m.replace(' ', '_')}-{rel}",
                    "question": template.format(m=m),
                    "question_entities": [m],
                    "answers": assignments[m][rel],
                }
            )
    rng.shuffle(pool)
    train = [instance_from_record(r, kg) for r in pool[:200]]
    test = [instance_from_record(r, kg) for r in pool[200:260]]

    tokens = set()
    for r in pool:
        tokens |= set(r["question"].lower().replace("?", " ").split())
    wordvec = _random_wordvec(tokens, word_dim, seed + 1)
    return MovieFixture(kg=kg, train=train, test=test, wordvec=wordvec)
