from .checkpoint import load_checkpoint, save_checkpoint
from .decode import decode_from_cache, decode_paths
from .loss import bidirectional_loss, js_divergence, kl_divergence
from .model import ForwardCache, GraphTensors, Reasoner, ReasonerState, vocab_hash
from .train import TrainConfig, TrainLog, hits_at_1_structural, train, usable_instances

__all__ = [
    "ForwardCache",
    "GraphTensors",
    "Reasoner",
    "ReasonerState",
    "TrainConfig",
    "TrainLog",
    "bidirectional_loss",
    "decode_from_cache",
    "decode_paths",
    "hits_at_1_structural",
    "js_divergence",
    "kl_divergence",
    "load_checkpoint",
    "save_checkpoint",
    "train",
    "usable_instances",
    "vocab_hash",
]
