"""End-to-end orchestration: config, per-question flow, reports, sweeps."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
import torch
import yaml

from . import reporting
from .answering import AnswerSet, answer
from .errors import ConfigError, EmptyDataset, LMUnavailable
from .kg.graph import KnowledgeGraph, load_triples_file
from .kg.paths import PathSet
from .kg.qa import QAInstance, load_dataset
from .lm import HTTPLMClient, LMClient, MockLMClient, load_mock_script
from .metrics import f1 as f1_metric
from .metrics import hits_at_1 as hits_metric
from .reasoner import (
    Reasoner,
    TrainConfig,
    TrainLog,
    decode_from_cache,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .rethink import (
    EmbeddingProvider,
    ReasonerEmbeddingProvider,
    RethinkConfig,
    RethinkResult,
    StaticEmbeddingProvider,
    rethink,
    score_report_lines,
)
from .semantic import (
    SemanticGeneration,
    build_distillation_targets,
    export_distillation_jsonl,
    generate_semantic_paths,
    path_to_text,
)

logger = logging.getLogger(__name__)

SWEEPABLE = ("theta", "lambda1")


# ----------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------


@dataclass
class StructuralSettings:
    epochs: int = 80
    batch_size: int = 40
    learning_rate: float = 4e-4
    steps: int = 2
    hidden_dim: int = 100
    beam: int = 8
    checkpoint: str | None = None
    train_if_missing: bool = True


@dataclass
class SemanticSettings:
    k: int = 3
    max_hops: int = 3
    fanout_limit: int = 256


@dataclass
class DistillSettings:
    """Downstream fine-tune regime, carried as export metadata only."""

    epochs: int = 3
    batch_size: int = 4
    learning_rate: float = 2e-5


@dataclass
class RethinkSettings:
    lambda1: float = 0.5
    lambda2: float = 0.5
    theta: float = 0.6

    def to_config(self) -> RethinkConfig:
        return RethinkConfig(self.lambda1, self.lambda2, self.theta)


@dataclass
class LMSettings:
    kind: str = "mock"
    script: str | None = None
    base_url: str | None = None
    token_env: str = "LM_API_TOKEN"
    timeout: float = 30.0


@dataclass
class PipelineConfig:
    kg_path: str
    dataset_path: str
    word_vectors_path: str
    output_dir: str = "out"
    seed: int = 0
    structural: StructuralSettings = field(default_factory=StructuralSettings)
    semantic: SemanticSettings = field(default_factory=SemanticSettings)
    distill: DistillSettings = field(default_factory=DistillSettings)
    rethink: RethinkSettings = field(default_factory=RethinkSettings)
    lm: LMSettings = field(default_factory=LMSettings)

    def validate(self) -> None:
        for name in ("kg_path", "dataset_path", "word_vectors_path"):
            path = getattr(self, name)
            if not path or not os.path.exists(path):
                raise ConfigError(f"{name} does not exist: {path!r}")
        if self.semantic.k <= 0 or self.semantic.max_hops < 0:
            raise ConfigError("semantic.k must be positive, semantic.max_hops >= 0")
        if self.semantic.fanout_limit <= 0:
            raise ConfigError("semantic.fanout_limit must be positive")
        if self.structural.beam <= 0:
            raise ConfigError("structural.beam must be positive")
        self.rethink.to_config()  # raises ConfigError on bad weights
        if self.lm.kind not in ("mock", "http"):
            raise ConfigError(f"lm.kind must be 'mock' or 'http', got {self.lm.kind!r}")
        if self.lm.kind == "mock" and not self.lm.script:
            raise ConfigError("lm.kind 'mock' requires lm.script")
        if self.lm.kind == "http" and not self.lm.base_url:
            raise ConfigError("lm.kind 'http' requires lm.base_url")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


_SECTION_TYPES = {
    "structural": StructuralSettings,
    "semantic": SemanticSettings,
    "distill": DistillSettings,
    "rethink": RethinkSettings,
    "lm": LMSettings,
}
_TOP_KEYS = {"kg", "dataset", "word_vectors", "output_dir", "seed"} | set(_SECTION_TYPES)


def _build_section(cls, raw: dict, section: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
    return cls(**raw)


def load_config(path: str) -> PipelineConfig:
    """Read a YAML or JSON pipeline configuration file."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    for key in ("kg", "dataset", "word_vectors"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    sections = {}
    for name, cls in _SECTION_TYPES.items():
        body = raw.get(name, {}) or {}
        if not isinstance(body, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        sections[name] = _build_section(cls, body, name)
    cfg = PipelineConfig(
        kg_path=str(raw["kg"]),
        dataset_path=str(raw["dataset"]),
        word_vectors_path=str(raw["word_vectors"]),
        output_dir=str(raw.get("output_dir", "out")),
        seed=int(raw.get("seed", 0)),
        **sections,
    )
    cfg.validate()
    return cfg


def make_lm_client(settings: LMSettings) -> LMClient:
    if settings.kind == "mock":
        if not settings.script:
            raise ConfigError("mock client requires a script path")
        return load_mock_script(settings.script)
    if settings.kind == "http":
        if not settings.base_url:
            raise ConfigError("http client requires base_url")
        return HTTPLMClient(
            settings.base_url, token_env=settings.token_env, timeout=settings.timeout
        )
    raise ConfigError(f"unknown lm kind {settings.kind!r}")


# ----------------------------------------------------------------------
# prepared context
# ----------------------------------------------------------------------


@dataclass
class PipelineContext:
    cfg: PipelineConfig
    kg: KnowledgeGraph
    wordvec: object
    instances: list[QAInstance]
    lm: LMClient
    model: Reasoner | None = None
    train_log: TrainLog | None = None
    trained_checkpoint: str | None = None


def prepare_context(cfg: PipelineConfig, need_model: bool = True) -> PipelineContext:
    """Load inputs and obtain a structural model (checkpoint or fresh train)."""
    cfg.validate()
    from .text import load_word_vectors

    kg = load_triples_file(cfg.kg_path)
    wordvec = load_word_vectors(cfg.word_vectors_path)
    instances = load_dataset(cfg.dataset_path, kg)
    if not instances:
        raise EmptyDataset(f"no instances in {cfg.dataset_path}")
    ctx = PipelineContext(
        cfg=cfg, kg=kg, wordvec=wordvec, instances=instances, lm=make_lm_client(cfg.lm)
    )
    if not need_model:
        return ctx

    st = cfg.structural
    if st.checkpoint and os.path.exists(st.checkpoint):
        ctx.model = load_checkpoint(st.checkpoint, wordvec, kg)
        logger.info("loaded structural checkpoint %s", st.checkpoint)
    elif st.train_if_missing:
        tc = TrainConfig(
            epochs=st.epochs,
            batch_size=st.batch_size,
            learning_rate=st.learning_rate,
            steps=st.steps,
            hidden_dim=st.hidden_dim,
            seed=cfg.seed,
        )
        ctx.model, ctx.train_log = train(kg, instances, wordvec, tc)
        reporting.ensure_dir(cfg.output_dir)
        ckpt_path = os.path.join(cfg.output_dir, "reasoner.ckpt")
        save_checkpoint(ctx.model, ckpt_path)
        ctx.trained_checkpoint = ckpt_path
        logger.info("trained structural model, checkpoint at %s", ckpt_path)
    else:
        raise ConfigError(
            "structural.checkpoint missing and structural.train_if_missing is false"
        )
    return ctx


# ----------------------------------------------------------------------
# per-question flow
# ----------------------------------------------------------------------


@dataclass
class QuestionOutcome:
    instance: QAInstance
    semantic: SemanticGeneration | None = None
    semantic_error: str | None = None
    structural: PathSet | None = None
    structural_skipped: str | None = None
    rethink_result: RethinkResult | None = None
    answer: AnswerSet | None = None
    answer_error: str | None = None
    hit: float = 0.0
    f1: float = 0.0

    @property
    def predictions(self) -> list[str]:
        return list(self.answer.answers) if self.answer else []


def run_question(
    ctx: PipelineContext, inst: QAInstance, do_answer: bool = True
) -> QuestionOutcome:
    cfg = ctx.cfg
    out = QuestionOutcome(instance=inst)

    try:
        out.semantic = generate_semantic_paths(
            inst, ctx.kg, ctx.lm, k=cfg.semantic.k, limit=cfg.semantic.fanout_limit
        )
    except LMUnavailable as exc:
        out.semantic_error = str(exc)

    provider: EmbeddingProvider
    if inst.question_entities and ctx.model is not None:
        cache = ctx.model.forward_pass(
            ctx.kg, inst.question, inst.question_entities, cfg.structural.steps
        )
        out.structural = decode_from_cache(ctx.kg, cache, cfg.structural.beam)
        provider = ReasonerEmbeddingProvider(ctx.model, ctx.kg, cache)
    else:
        out.structural_skipped = (
            "question-unlinked" if not inst.question_entities else "no-model"
        )
        provider = StaticEmbeddingProvider(
            ctx.model.hidden_dim if ctx.model else 1, kg=ctx.kg
        )

    candidates = []
    if out.semantic is not None:
        candidates.append(out.semantic.paths)
    if out.structural is not None:
        candidates.append(out.structural)
    out.rethink_result = rethink(
        ctx.kg, inst.question, candidates, cfg.rethink.to_config(), provider
    )

    if do_answer:
        try:
            out.answer = answer(inst, out.rethink_result.retained, ctx.lm)
        except LMUnavailable as exc:
            out.answer_error = str(exc)
        out.hit = hits_metric(out.predictions, inst.answer_labels)
        out.f1 = f1_metric(out.predictions, inst.answer_labels)
    return out


# ----------------------------------------------------------------------
# evaluation report
# ----------------------------------------------------------------------


@dataclass
class EvalReport:
    records: list[dict]
    aggregates: dict

    def to_dict(self) -> dict:
        return {"aggregates": self.aggregates, "records": self.records}


def _outcome_record(out: QuestionOutcome) -> dict:
    inst = out.instance
    errors = []
    if out.semantic_error:
        errors.append(f"semantic: {out.semantic_error}")
    if out.answer_error:
        errors.append(f"answer: {out.answer_error}")
    return {
        "question_id": inst.id,
        "question": inst.question,
        "gold": list(inst.answer_labels),
        "predictions": out.predictions,
        "hits_at_1": out.hit,
        "f1": out.f1,
        "retained_count": len(out.rethink_result.retained) if out.rethink_result else 0,
        "filtered_count": len(out.rethink_result.filtered) if out.rethink_result else 0,
        "semantic_candidates": len(out.semantic.paths) if out.semantic else 0,
        "structural_candidates": len(out.structural) if out.structural else 0,
        "dropped_unparsable": out.semantic.dropped_unparsable if out.semantic else 0,
        "dropped_ungroundable": out.semantic.dropped_ungroundable if out.semantic else 0,
        "structural_skipped": out.structural_skipped,
        "parse_failed": bool(out.answer.parse_failed) if out.answer else False,
        "errors": errors,
    }


def build_report(outcomes: list[QuestionOutcome]) -> EvalReport:
    records = [_outcome_record(o) for o in outcomes]
    n = len(records)
    aggregates = {
        "num_questions": n,
        "hits_at_1": sum(r["hits_at_1"] for r in records) / n,
        "f1": sum(r["f1"] for r in records) / n,
        "retained_mean": sum(r["retained_count"] for r in records) / n,
        "parse_failures": sum(1 for r in records if r["parse_failed"]),
        "semantic_errors": sum(1 for r in records if any(e.startswith("semantic") for e in r["errors"])),
        "answer_errors": sum(1 for r in records if any(e.startswith("answer") for e in r["errors"])),
        "structural_skipped": sum(1 for r in records if r["structural_skipped"]),
        "unlinked_questions": sum(
            1 for o in outcomes if o.instance.question_unlinked
        ),
    }
    return EvalReport(records=records, aggregates=aggregates)


def _write_manifest(cfg: PipelineConfig, command: str, extra: dict | None = None) -> None:
    from . import __version__

    manifest = {
        "command": command,
        "config": cfg.to_dict(),
        "config_sha256": cfg.config_hash(),
        "package_version": __version__,
        "torch_version": torch.__version__,
        "numpy_version": np.__version__,
        "seed": cfg.seed,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    reporting.write_json(manifest, os.path.join(cfg.output_dir, "manifest.json"))


def _write_train_artifacts(ctx: PipelineContext) -> None:
    log = ctx.train_log
    if log is None:
        return
    out_dir = ctx.cfg.output_dir
    reporting.ensure_dir(os.path.join(out_dir, "figures"))
    with open(os.path.join(out_dir, "training_log.csv"), "w", encoding="utf-8") as fh:
        fh.write("epoch,loss\n")
        for i, loss in enumerate(log.epoch_losses, start=1):
            fh.write(f"{i},{loss!r}\n")
    reporting.save_training_curve(
        log.epoch_losses, os.path.join(out_dir, "figures", "training_loss.png")
    )


def run_pipeline(cfg: PipelineConfig, write_artifacts: bool = True) -> EvalReport:
    """Evaluate every dataset question end to end.

    Inputs (graph file, checkpoint) are never mutated; all artifacts land
    under ``cfg.output_dir``.  With a mock client and a fixed seed the
    report files are byte-identical between runs.
    """
    ctx = prepare_context(cfg)
    outcomes = []
    score_lines: list[str] = []
    for inst in ctx.instances:
        out = run_question(ctx, inst)
        outcomes.append(out)
        if out.rethink_result is not None:
            score_lines.extend(score_report_lines(inst.id, out.rethink_result))
    report = build_report(outcomes)

    if write_artifacts:
        out_dir = cfg.output_dir
        reporting.ensure_dir(out_dir)
        reporting.ensure_dir(os.path.join(out_dir, "figures"))
        _write_train_artifacts(ctx)
        reporting.write_json(report.to_dict(), os.path.join(out_dir, "report.json"))
        with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
            fh.write(reporting.format_eval_table(report.to_dict()))
        reporting.write_jsonl(
            (json.dumps(r, ensure_ascii=False, sort_keys=True) for r in report.records),
            os.path.join(out_dir, "records.jsonl"),
        )
        reporting.write_jsonl(score_lines, os.path.join(out_dir, "scores.jsonl"))
        reporting.save_eval_figure(
            report.to_dict(), os.path.join(out_dir, "figures", "eval_summary.png")
        )
        _write_manifest(cfg, "evaluate")
    return report


# ----------------------------------------------------------------------
# sweep
# ----------------------------------------------------------------------


def sweep(
    cfg: PipelineConfig,
    parameter: str,
    values: list[float],
    write_artifacts: bool = True,
) -> list[dict]:
    """Re-evaluate the pipeline across a sorted grid of one rethink knob.

    The structural model is prepared once and shared by every cell; a
    failing cell records NaN metrics and the sweep continues.
    """
    if parameter not in SWEEPABLE:
        raise ValueError(f"parameter must be one of {SWEEPABLE}, got {parameter!r}")
    if not values:
        raise ValueError("values must be non-empty")
    if sorted(values) != list(values):
        raise ValueError("values must be sorted ascending")

    ctx = prepare_context(cfg)
    rows = []
    for value in values:
        if parameter == "theta":
            settings = dataclasses.replace(cfg.rethink, theta=value)
        else:
            settings = dataclasses.replace(cfg.rethink, lambda1=value, lambda2=1.0 - value)
        cell_cfg = dataclasses.replace(cfg, rethink=settings)
        cell_ctx = dataclasses.replace(ctx, cfg=cell_cfg)
        try:
            outcomes = [run_question(cell_ctx, inst) for inst in ctx.instances]
            report = build_report(outcomes)
            rows.append(
                {
                    "value": value,
                    "hits_at_1": report.aggregates["hits_at_1"],
                    "f1": report.aggregates["f1"],
                    "retained_mean": report.aggregates["retained_mean"],
                }
            )
        except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
            logger.warning("sweep cell %s=%s failed: %s", parameter, value, exc)
            rows.append(
                {
                    "value": value,
                    "hits_at_1": math.nan,
                    "f1": math.nan,
                    "retained_mean": math.nan,
                    "error": str(exc),
                }
            )

    if write_artifacts:
        reporting.ensure_dir(cfg.output_dir)
        reporting.ensure_dir(os.path.join(cfg.output_dir, "figures"))
        reporting.write_sweep_csv(rows, os.path.join(cfg.output_dir, "sweep.csv"))
        reporting.save_sweep_figure(
            rows, parameter, os.path.join(cfg.output_dir, "figures", f"sweep_{parameter}.png")
        )
        _write_manifest(cfg, "sweep", {"parameter": parameter, "values": values})
    return rows


# ----------------------------------------------------------------------
# single-stage commands (CLI backends)
# ----------------------------------------------------------------------


def run_ingest(cfg: PipelineConfig) -> dict:
    kg = load_triples_file(cfg.kg_path)
    stats = {
        "entities": kg.num_entities,
        "relations": kg.num_base_relations,
        "relations_augmented": kg.num_relations_augmented,
        "triples": len(kg.triples),
    }
    reporting.ensure_dir(cfg.output_dir)
    reporting.write_json(stats, os.path.join(cfg.output_dir, "kg_stats.json"))
    _write_manifest(cfg, "ingest")
    return stats


def run_train(cfg: PipelineConfig) -> str:
    """Train the structural reasoner and persist checkpoint + curves."""
    ctx = prepare_context(
        dataclasses.replace(
            cfg,
            structural=dataclasses.replace(
                cfg.structural, checkpoint=None, train_if_missing=True
            ),
        )
    )
    _write_train_artifacts(ctx)
    _write_manifest(cfg, "train-structural", {"checkpoint": ctx.trained_checkpoint})
    return ctx.trained_checkpoint or ""


def run_build_distill(cfg: PipelineConfig) -> dict:
    ctx = prepare_context(cfg, need_model=False)
    build = build_distillation_targets(ctx.kg, ctx.instances, cfg.semantic.max_hops)
    out_dir = cfg.output_dir
    reporting.ensure_dir(out_dir)
    export_distillation_jsonl(build.pairs, os.path.join(out_dir, "distill.jsonl"))
    reporting.write_jsonl(
        (
            json.dumps({"question_id": qid, "reason": reason}, sort_keys=True)
            for qid, reason in build.exclusions
        ),
        os.path.join(out_dir, "exclusions.jsonl"),
    )
    meta = {
        "pairs": len(build.pairs),
        "emitted_questions": build.emitted_questions,
        "excluded_questions": len(build.exclusions),
        "total_questions": len(ctx.instances),
        "finetune_regime": dataclasses.asdict(cfg.distill),
    }
    reporting.write_json(meta, os.path.join(out_dir, "distill_meta.json"))
    _write_manifest(cfg, "build-distill", meta)
    return meta


def run_generate_paths(cfg: PipelineConfig) -> list[dict]:
    ctx = prepare_context(cfg, need_model=False)
    rows = []
    for inst in ctx.instances:
        try:
            gen = generate_semantic_paths(
                inst, ctx.kg, ctx.lm, k=cfg.semantic.k, limit=cfg.semantic.fanout_limit
            )
            rows.append(
                {
                    "question_id": inst.id,
                    "candidates": gen.candidates,
                    "paths": [path_to_text(ctx.kg, p) for p in gen.paths],
                    "dropped_unparsable": gen.dropped_unparsable,
                    "dropped_ungroundable": gen.dropped_ungroundable,
                    "complete": gen.paths.complete,
                }
            )
        except LMUnavailable as exc:
            rows.append({"question_id": inst.id, "error": str(exc)})
    reporting.ensure_dir(cfg.output_dir)
    reporting.write_jsonl(
        (json.dumps(r, ensure_ascii=False, sort_keys=True) for r in rows),
        os.path.join(cfg.output_dir, "paths.jsonl"),
    )
    _write_manifest(cfg, "generate-paths")
    return rows


def run_rethink(cfg: PipelineConfig) -> int:
    ctx = prepare_context(cfg)
    score_lines: list[str] = []
    for inst in ctx.instances:
        out = run_question(ctx, inst, do_answer=False)
        if out.rethink_result is not None:
            score_lines.extend(score_report_lines(inst.id, out.rethink_result))
    reporting.ensure_dir(cfg.output_dir)
    reporting.write_jsonl(score_lines, os.path.join(cfg.output_dir, "scores.jsonl"))
    _write_manifest(cfg, "rethink")
    return len(score_lines)


def run_answer(cfg: PipelineConfig) -> list[dict]:
    ctx = prepare_context(cfg)
    rows = []
    for inst in ctx.instances:
        out = run_question(ctx, inst)
        rows.append(
            {
                "question_id": inst.id,
                "question": inst.question,
                "answers": out.predictions,
                "parse_failed": bool(out.answer.parse_failed) if out.answer else False,
                "raw": out.answer.raw if out.answer else "",
                "error": out.answer_error,
            }
        )
    reporting.ensure_dir(cfg.output_dir)
    reporting.write_jsonl(
        (json.dumps(r, ensure_ascii=False, sort_keys=True) for r in rows),
        os.path.join(cfg.output_dir, "answers.jsonl"),
    )
    _write_manifest(cfg, "answer")
    return rows
