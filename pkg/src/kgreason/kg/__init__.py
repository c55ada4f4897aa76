from .graph import (
    INV_SUFFIX,
    STAY_LABEL,
    KnowledgeGraph,
    build_graph,
    ingest_triples,
    load_triples_file,
    save_triples_file,
)
from .paths import (
    PathSet,
    ReasoningPath,
    RelationPath,
    dedup_paths,
    instantiate_relation_path,
    shortest_paths,
)
from .qa import QAInstance, instance_from_record, load_dataset, save_dataset

__all__ = [
    "INV_SUFFIX",
    "STAY_LABEL",
    "KnowledgeGraph",
    "PathSet",
    "QAInstance",
    "ReasoningPath",
    "RelationPath",
    "build_graph",
    "dedup_paths",
    "ingest_triples",
    "instance_from_record",
    "instantiate_relation_path",
    "load_dataset",
    "load_triples_file",
    "save_dataset",
    "save_triples_file",
    "shortest_paths",
]
