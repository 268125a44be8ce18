"""Distillation loop: fit a student to a frozen teacher's hidden layers."""

from __future__ import annotations

import csv
import io
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DegenerateVectorError, PersistenceError, TrainingDivergedError
from ..models import StudentModel, TeacherModel, teacher_forward
from ..tensor import Tape, Tensor, no_grad
from .config import DistillConfig
from .loss import Reduction, total_loss_terms
from .optim import OptimizerState, adam_step
from .schedule import lr_at

logger = logging.getLogger(__name__)

TRACE_HEADER = ("step", "lr", "total_loss", "l1_term", "cos_term", "val_total")


@dataclass
class TraceRow:
    step: int
    lr: float | None = None
    total_loss: float | None = None
    l1_term: float | None = None
    cos_term: float | None = None
    val_total: float | None = None


@dataclass
class MetricsTrace:
    """Per-step training metrics. The last row (``step == total_steps``) carries
    only the post-training validation loss."""

    rows: list[TraceRow] = field(default_factory=list)
    skipped_steps: list[int] = field(default_factory=list)

    def validation(self) -> list[tuple[int, float]]:
        return [(r.step, r.val_total) for r in self.rows if r.val_total is not None]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for r in self.rows:
            writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v)
                             for v in (r.step, r.lr, r.total_loss, r.l1_term, r.cos_term, r.val_total)])
        return buf.getvalue()

    def write(self, path: str | Path) -> None:
        try:
            Path(path).write_text(self.to_csv(), encoding="utf-8")
        except OSError as exc:
            raise PersistenceError(f"{path}: cannot write metrics: {exc.strerror or exc}") from exc


@dataclass
class ValidationMetrics:
    total: float
    l1: list[float]
    cos: list[float]


class TargetCache:
    """Teacher outputs per utterance index; the teacher is frozen so each is computed once."""

    def __init__(self, teacher: TeacherModel, corpus, target_layers: Sequence[int]):
        self.teacher = teacher
        self.corpus = corpus
        self.target_layers = tuple(target_layers)
        self._store: dict[int, tuple[np.ndarray, list[np.ndarray]]] = {}

    def get(self, index: int) -> tuple[np.ndarray, list[np.ndarray]]:
        hit = self._store.get(index)
        if hit is None:
            wave = self.corpus.wave(index)
            stack = teacher_forward(wave, self.teacher)
            hit = (wave, [t.data for t in stack.select(self.target_layers)])
            self._store[index] = hit
        return hit


def _predict(student: StudentModel, waves, n: int) -> list[Tensor]:
    f = student.features(waves)
    return student.predict(f, n if student.variant.autoregressive else None)


def validate(student: StudentModel, teacher: TeacherModel | None, waves, target_layers: Sequence[int],
             lam: float = 1.0, reduction: Reduction | str = Reduction.MEAN_T_AND_L,
             targets: Sequence[Sequence[np.ndarray]] | None = None) -> ValidationMetrics:
    """Mean distillation loss over utterances, with per-layer L1 and cosine terms.

    Utterances are evaluated one at a time and combined with ``math.fsum`` so
    the result does not depend on iteration order. Pass precomputed
    ``targets`` to skip the teacher.
    """
    n = len(target_layers)
    totals: list[float] = []
    l1s: list[list[float]] = [[] for _ in range(n)]
    coss: list[list[float]] = [[] for _ in range(n)]
    with no_grad():
        for i, wave in enumerate(waves):
            if targets is None:
                tgt = [t.data for t in teacher_forward(wave, teacher).select(target_layers)]
            else:
                tgt = targets[i]
            preds = _predict(student, np.asarray(wave), n)
            total, l1, cos = total_loss_terms(preds, [Tensor(t) for t in tgt], lam, reduction)
            totals.append(total.item())
            for j in range(n):
                l1s[j].append(l1[j].item())
                coss[j].append(cos[j].item())
    m = len(totals)
    return ValidationMetrics(
        total=math.fsum(totals) / m,
        l1=[math.fsum(x) / m for x in l1s],
        cos=[math.fsum(x) / m for x in coss],
    )


def batch_indices(cfg: DistillConfig, step: int, pool: Sequence[int]) -> list[int]:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, step])))
    picks = rng.choice(len(pool), size=cfg.batch_size, replace=len(pool) < cfg.batch_size)
    return [pool[int(i)] for i in picks]


def _groups(items: list[tuple[np.ndarray, list[np.ndarray]]]):
    by_len: dict[int, list[int]] = {}
    for i, (wave, _) in enumerate(items):
        by_len.setdefault(len(wave), []).append(i)
    for length in sorted(by_len):
        members = by_len[length]
        waves = np.stack([items[i][0] for i in members])
        targets = [np.stack([items[i][1][j] for i in members]) for j in range(len(items[0][1]))]
        yield len(members), waves, targets


def distill(teacher: TeacherModel, student: StudentModel, cfg: DistillConfig, corpus,
            log_every: int = 0) -> MetricsTrace:
    """Train ``student`` in place; returns the metrics trace."""
    cfg.check_teacher_depth(teacher.cfg.n_layers)
    params = student.parameters()
    state = OptimizerState()
    cache = TargetCache(teacher, corpus, cfg.target_layers)
    pool = corpus.train_indices
    val_items = [cache.get(i) for i in corpus.val_indices]
    val_waves = [w for w, _ in val_items]
    val_targets = [t for _, t in val_items]
    n = len(cfg.target_layers)
    trace = MetricsTrace()

    def run_validation() -> float:
        return validate(student, None, val_waves, cfg.target_layers, cfg.lam, cfg.reduction,
                        targets=val_targets).total

    for step in range(cfg.total_steps):
        rate = lr_at(step, cfg.total_steps, cfg.peak_lr, cfg.warmup_fraction)
        row = TraceRow(step=step, lr=rate)
        if step % cfg.val_every == 0:
            row.val_total = run_validation()
        items = [cache.get(i) for i in batch_indices(cfg, step, pool)]
        try:
            with Tape() as tape:
                loss = l1_sum = cos_sum = None
                for count, waves, targets in _groups(items):
                    weight = count / len(items)
                    preds = _predict(student, waves, n)
                    total, l1s, coss = total_loss_terms(preds, [Tensor(t) for t in targets], cfg.lam, cfg.reduction)
                    part = total * weight
                    loss = part if loss is None else loss + part
                    scale = weight / n if cfg.reduction is Reduction.MEAN_T_AND_L else weight
                    l1 = scale * math.fsum(x.item() for x in l1s)
                    cs = scale * math.fsum(x.item() for x in coss)
                    l1_sum = l1 if l1_sum is None else l1_sum + l1
                    cos_sum = cs if cos_sum is None else cos_sum + cs
        except DegenerateVectorError as exc:
            logger.warning("step %d skipped: %s (batch seed [%d, %d])", step, exc, cfg.seed, step)
            trace.skipped_steps.append(step)
            trace.rows.append(row)
            continue
        value = loss.item()
        if not math.isfinite(value):
            raise TrainingDivergedError(f"non-finite loss {value} at step {step} (batch seed [{cfg.seed}, {step}])")
        grads = tape.gradient(loss, params)
        adam_step(params, grads, state, rate)
        row.total_loss, row.l1_term, row.cos_term = value, l1_sum, cos_sum
        trace.rows.append(row)
        if log_every and step % log_every == 0:
            logger.info("step %d lr %.3g loss %.5f", step, rate, value)
    trace.rows.append(TraceRow(step=cfg.total_steps, val_total=run_validation()))
    student.trained_target_count = n
    return trace


@dataclass
class TrainResult:
    checkpoint: object
    trace: MetricsTrace
    student: StudentModel
    teacher: TeacherModel


def build_models(config) -> tuple[TeacherModel, StudentModel]:
    from ..models import build_student, build_teacher

    teacher = build_teacher(config.teacher)
    s = config.student
    donor = None
    if config.init_frontend_from_teacher:
        if s.frontend == config.teacher.frontend:
            donor = teacher
        else:
            logger.info("student front end differs from the teacher's; using random initialisation")
    student = build_student(s.variant, s.frontend, s.block, config.student_seed, teacher=donor,
                            step_embedding=s.step_embedding)
    return teacher, student


def train(config, log_every: int = 0) -> TrainResult:
    """Run a full distillation from a :class:`~gendistill.io.runconfig.RunConfig`.

    Writes the checkpoint and metrics CSV when the config names output paths.
    """
    from ..io.checkpoint import Checkpoint
    from ..io.runconfig import serialize

    teacher, student = build_models(config)
    trace = distill(teacher, student, config.distill, config.data.corpus(), log_every=log_every)
    ckpt = Checkpoint(serialize(config), {k: t.data for k, t in student.named_parameters()})
    if config.output.checkpoint:
        ckpt.save(config.output.checkpoint, config.output.storage_dtype)
    if config.output.metrics:
        trace.write(config.output.metrics)
    return TrainResult(ckpt, trace, student, teacher)
