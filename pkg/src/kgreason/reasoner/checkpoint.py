"""Checkpoint archive: JSON metadata plus raw float32 tensors.

The archive is a zip whose ``meta.json`` records shapes, dims, seed, and
vocabulary hashes; each state tensor lives under ``tensors/<name>.f32le``
as little-endian float32 bytes.  Loading restores float64 parameters, so
a round trip equals the original up to float32 quantization.
"""

from __future__ import annotations

import json
import zipfile

import numpy as np
import torch

from ..errors import DimensionMismatch
from ..kg.graph import KnowledgeGraph
from ..text import WordVectorTable
from .model import Reasoner, vocab_hash

FORMAT_NAME = "kgreason-reasoner"
FORMAT_VERSION = 1


def save_checkpoint(model: Reasoner, path: str) -> None:
    state = model.state_dict()
    meta = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "hidden_dim": model.hidden_dim,
        "word_dim": model.word_dim,
        "num_relations_augmented": model.num_relations_augmented,
        "seed": model.seed,
        "entity_vocab_sha256": model.entity_vocab_hash,
        "relation_vocab_sha256": model.relation_vocab_hash,
        "tensors": {name: list(t.shape) for name, t in state.items()},
    }
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("meta.json", json.dumps(meta, indent=2, sort_keys=True))
        for name, tensor in state.items():
            raw = tensor.detach().cpu().numpy().astype("<f4").tobytes()
            zf.writestr(f"tensors/{name}.f32le", raw)


def load_checkpoint(
    path: str,
    wordvec: WordVectorTable,
    kg: KnowledgeGraph | None = None,
) -> Reasoner:
    with zipfile.ZipFile(path) as zf:
        meta = json.loads(zf.read("meta.json"))
        if meta.get("format") != FORMAT_NAME:
            raise DimensionMismatch(f"not a {FORMAT_NAME} archive: {path}")
        if wordvec.dim != meta["word_dim"]:
            raise DimensionMismatch(
                f"word vectors have dim {wordvec.dim}, checkpoint expects {meta['word_dim']}"
            )
        if kg is not None:
            if vocab_hash(kg.entities) != meta["entity_vocab_sha256"]:
                raise DimensionMismatch("entity vocabulary differs from checkpoint")
            if vocab_hash(kg.relations) != meta["relation_vocab_sha256"]:
                raise DimensionMismatch("relation vocabulary differs from checkpoint")
        model = Reasoner(
            meta["num_relations_augmented"],
            wordvec,
            hidden_dim=meta["hidden_dim"],
            seed=meta["seed"],
            entity_vocab_hash=meta["entity_vocab_sha256"],
            relation_vocab_hash=meta["relation_vocab_sha256"],
        )
        state = {}
        for name, shape in meta["tensors"].items():
            raw = zf.read(f"tensors/{name}.f32le")
            arr = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)
            state[name] = torch.from_numpy(arr)
        model.load_state_dict(state)
    return model
