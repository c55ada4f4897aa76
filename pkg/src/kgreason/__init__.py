"""Reasoning paths over knowledge graphs: generate, train, rank, answer."""

__version__ = "0.1.0"

from .answering import AnswerSet, PromptBundle, answer, build_reasoning_prompt, parse_answers
from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptyBatch,
    EmptyDataset,
    KGReasonError,
    LMUnavailable,
    MalformedRecord,
    NotNormalized,
    UnknownEntity,
    UnknownRelation,
    UnparsablePath,
)
from .kg import (
    KnowledgeGraph,
    PathSet,
    QAInstance,
    ReasoningPath,
    RelationPath,
    ingest_triples,
    instantiate_relation_path,
    load_dataset,
    load_triples_file,
    shortest_paths,
)
from .lm import HTTPLMClient, LMClient, MockLMClient, load_mock_script
from .metrics import f1, hits_at_1, normalize_label
from .pipeline import PipelineConfig, load_config, run_pipeline, sweep
from .reasoner import Reasoner, TrainConfig, bidirectional_loss, decode_paths, train
from .rethink import RethinkConfig, ScoredPath, rethink
from .semantic import (
    build_distillation_targets,
    distillation_loss,
    generate_semantic_paths,
    parse_path_text,
    path_posterior,
    path_to_text,
)
from .text import WordVectorTable, load_word_vectors, tokenize

__all__ = [
    "AnswerSet",
    "ConfigError",
    "DimensionMismatch",
    "EmptyBatch",
    "EmptyDataset",
    "HTTPLMClient",
    "KGReasonError",
    "KnowledgeGraph",
    "LMClient",
    "LMUnavailable",
    "MalformedRecord",
    "MockLMClient",
    "NotNormalized",
    "PathSet",
    "PipelineConfig",
    "PromptBundle",
    "QAInstance",
    "Reasoner",
    "ReasoningPath",
    "RelationPath",
    "RethinkConfig",
    "ScoredPath",
    "TrainConfig",
    "UnknownEntity",
    "UnknownRelation",
    "UnparsablePath",
    "WordVectorTable",
    "answer",
    "bidirectional_loss",
    "build_distillation_targets",
    "build_reasoning_prompt",
    "decode_paths",
    "distillation_loss",
    "f1",
    "generate_semantic_paths",
    "hits_at_1",
    "ingest_triples",
    "instantiate_relation_path",
    "load_config",
    "load_dataset",
    "load_mock_script",
    "load_triples_file",
    "load_word_vectors",
    "normalize_label",
    "parse_answers",
    "parse_path_text",
    "path_posterior",
    "path_to_text",
    "rethink",
    "run_pipeline",
    "shortest_paths",
    "sweep",
    "tokenize",
    "train",
    "__version__",
]
