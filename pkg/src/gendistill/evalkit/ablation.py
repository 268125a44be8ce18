"""Ablation harness: architecture, width and target-layer sweeps under one budget."""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..distill.config import DistillConfig
from ..distill.train import distill, validate
from ..errors import ConfigError, PersistenceError
from ..io.runconfig import RunConfig
from ..models import StudentModel, StudentVariant, build_teacher, count_params
from .probe import eval_probe, get_task, train_probe

logger = logging.getLogger(__name__)

REPORT_HEADER = (
    "run", "variant", "ffn_hidden", "conv_channels", "target_layers", "gen_length",
    "params", "val_loss", "probe_acc", "steps", "seed",
)


@dataclass(frozen=True)
class AblationRun:
    name: str
    variant: str = "proposed"
    ffn_hidden: int | None = None
    conv_channels: int | None = None
    target_layers: tuple[int, ...] | None = None
    gen_length: int | None = None
    # name of an earlier run whose trained student is reused (inference-only sweep)
    reuse: str | None = None


@dataclass(frozen=True)
class AblationSuite:
    name: str
    runs: tuple[AblationRun, ...]
    base: RunConfig = field(default_factory=lambda: RunConfig.preset("desk", total_steps=300))
    probe_task: str = "band"
    probe_steps: int = 1000
    seed: int = 0

    def __post_init__(self):
        names = [r.name for r in self.runs]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate run names in suite")
        for i, r in enumerate(self.runs):
            if r.reuse is not None and r.reuse not in names[:i]:
                raise ConfigError(f"run {r.name!r} reuses {r.reuse!r}, which is not an earlier run")

    def run_config(self, run: AblationRun) -> RunConfig:
        """Suite base with the run's overrides; teacher and data are shared."""
        base = self.base
        student = base.student
        if run.ffn_hidden is not None:
            student = replace(student, block=replace(student.block, ffn_hidden=run.ffn_hidden))
        if run.conv_channels is not None:
            student = replace(student, frontend=student.frontend.with_channels(run.conv_channels))
        student = replace(student, variant=StudentVariant.from_name(run.variant))
        distill_cfg = replace(base.distill, seed=self.seed)
        if run.target_layers is not None:
            distill_cfg = replace(distill_cfg, target_layers=run.target_layers)
        return replace(base, student=student, distill=distill_cfg, student_seed=self.seed)


@dataclass
class ReportRow:
    run: str
    variant: str
    ffn_hidden: int
    conv_channels: int
    target_layers: tuple[int, ...]
    gen_length: int
    params: int
    val_loss: float | None = None
    probe_acc: float | None = None
    steps: int = 0
    seed: int = 0
    error: str | None = None

    def cells(self) -> list[str]:
        def num(x):
            return "" if x is None else repr(x)

        return [self.run, self.variant, str(self.ffn_hidden), str(self.conv_channels),
                " ".join(map(str, self.target_layers)), str(self.gen_length), str(self.params),
                num(self.val_loss), num(self.probe_acc), str(self.steps), str(self.seed)]


@dataclass
class AblationReport:
    suite: str
    rows: list[ReportRow]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for row in self.rows:
            writer.writerow(row.cells())
        return buf.getvalue()

    def write(self, path: str | Path) -> None:
        try:
            Path(path).write_text(self.to_csv(), encoding="utf-8")
        except OSError as exc:
            raise PersistenceError(f"{path}: cannot write report: {exc.strerror or exc}") from exc


def run_ablation(suite: AblationSuite) -> AblationReport:
    """Train and evaluate every run; a failing run is recorded, not raised."""
    teacher = build_teacher(suite.base.teacher)
    corpus = suite.base.data.corpus()
    task = get_task(suite.probe_task)
    by_name = {r.name: r for r in suite.runs}
    trained: dict[str, StudentModel] = {}
    rows = []
    for run in suite.runs:
        row = ReportRow(run=run.name, variant=run.variant, ffn_hidden=run.ffn_hidden or 0,
                        conv_channels=run.conv_channels or 0, target_layers=run.target_layers or (),
                        gen_length=run.gen_length or 0, params=0, seed=suite.seed)
        try:
            cfg = suite.run_config(by_name[run.reuse] if run.reuse else run)
            v = cfg.student.variant
            n_targets = len(cfg.distill.target_layers)
            gen_length = run.gen_length if run.gen_length is not None else (
                n_targets if v.autoregressive else v.n_targets)
            row.variant, row.gen_length = v.name, gen_length
            row.ffn_hidden = cfg.student.block.ffn_hidden
            row.conv_channels = cfg.student.frontend.channels
            row.target_layers = cfg.distill.target_layers
            row.params = count_params(cfg.student)
            row.steps = cfg.distill.total_steps
            if run.reuse:
                student = trained[run.reuse]
            else:
                student = _build_student(cfg, teacher)
                distill(teacher, student, cfg.distill, corpus)
                trained[run.name] = student
            row.val_loss = _val_loss(student, teacher, corpus, cfg.distill, gen_length)
            probe = train_probe(student, task, gen_length=gen_length, steps=suite.probe_steps, seed=suite.seed)
            row.probe_acc = eval_probe(probe, student, task).accuracy
        except Exception as exc:  # noqa: BLE001 - recorded per row by contract
            row.error = f"{type(exc).__name__}: {exc}"
            logger.error("ablation run %s failed: %s", run.name, row.error)
        rows.append(row)
    return AblationReport(suite.name, rows)


def _build_student(cfg: RunConfig, teacher):
    from ..models import build_student

    s = cfg.student
    donor = teacher if cfg.init_frontend_from_teacher and s.frontend == teacher.cfg.frontend else None
    return build_student(s.variant, s.frontend, s.block, cfg.student_seed, teacher=donor,
                         step_embedding=s.step_embedding)


def _val_loss(student, teacher, corpus, dcfg: DistillConfig, gen_length: int) -> float:
    """Validation loss over the generated layers that have a trained target."""
    layers = dcfg.target_layers[: min(gen_length, len(dcfg.target_layers))]
    if not student.variant.autoregressive:
        layers = dcfg.target_layers
    waves = [corpus.wave(i) for i in corpus.val_indices]
    m = validate(student, teacher, waves, layers, dcfg.lam, dcfg.reduction)
    return m.total if math.isfinite(m.total) else float("nan")


# ------------------------------------------------------------------ built-in suites

ARCHITECTURE_RUNS = (
    AblationRun("feat & 2 layers -> 3 layers", variant="feat-2-layers"),
    AblationRun("3 layers -> 3 layers", variant="3-layers"),
    AblationRun("1 layer -> 3 layers", variant="ar-plain"),
    AblationRun("+cross attention", variant="ar-cross"),
    AblationRun("+skip connect (w/o output layer)", variant="ar-skip"),
    AblationRun("+output layer (w/o skip connect)", variant="ar-head"),
    AblationRun("+skip connect+output layer (proposed)", variant="proposed"),
)

# desk analogs of 3072/2048/1536 hidden units and 512 -> 256 conv channels
WIDTH_RUNS = (
    AblationRun("64 hidden units (proposed)", ffn_hidden=64),
    AblationRun("43 hidden units", ffn_hidden=43),
    AblationRun("32 hidden units", ffn_hidden=32),
    AblationRun("16 output channel", conv_channels=16),
)

TARGET_RUNS = (
    AblationRun("4,8 (proposed)", target_layers=(4, 8)),
    AblationRun("12", target_layers=(12,)),
    AblationRun("4,12", target_layers=(4, 12)),
    AblationRun("4,8,12", target_layers=(4, 8, 12)),
    AblationRun("4,6,8,12", target_layers=(4, 6, 8, 12)),
    AblationRun("gen length 2", reuse="4,8,12", gen_length=2),
    AblationRun("gen length 3", reuse="4,8,12", gen_length=3),
    AblationRun("gen length 4", reuse="4,8,12", gen_length=4),
)

BUILTIN_SUITES = {"architecture": ARCHITECTURE_RUNS, "width": WIDTH_RUNS, "targets": TARGET_RUNS}


def builtin_suite(name: str, steps: int = 300, **kwargs) -> AblationSuite:
    try:
        runs = BUILTIN_SUITES[name]
    except KeyError:
        raise ConfigError(f"unknown suite {name!r}; known: {', '.join(BUILTIN_SUITES)}") from None
    return AblationSuite(name, runs, base=RunConfig.preset("desk", total_steps=steps), **kwargs)


# ------------------------------------------------------------------ suite files


def parse_suite(text: str, name: str = "suite") -> AblationSuite:
    """Suite file: a ``[suite]`` section, an optional ``[base]`` run-config path, ``[run.<name>]`` sections.

    ``[suite]`` keys: ``steps``, ``seed``, ``probe_task``, ``probe_steps``,
    ``builtin`` (start from a built-in run list), ``base_config`` (run-config
    file for the shared teacher, data and training settings).
    """
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed suite: {exc}") from exc
    head = dict(parser.items("suite")) if parser.has_section("suite") else {}
    if "base_config" in head:
        from ..io.runconfig import load

        base = load(head.pop("base_config"))
    else:
        base = RunConfig.preset("desk")
    steps = head.pop("steps", None)
    if steps is not None:
        base = replace(base, distill=replace(base.distill, total_steps=int(steps)))
    runs = list(BUILTIN_SUITES[head.pop("builtin")]) if "builtin" in head else []
    for section in parser.sections():
        if not section.startswith("run."):
            if section != "suite":
                raise ConfigError(f"unknown suite section [{section}]")
            continue
        items = dict(parser.items(section))
        targets = items.pop("target_layers", None)
        try:
            run = AblationRun(
                name=section[4:],
                variant=items.pop("variant", "proposed"),
                ffn_hidden=int(items.pop("ffn_hidden")) if "ffn_hidden" in items else None,
                conv_channels=int(items.pop("conv_channels")) if "conv_channels" in items else None,
                target_layers=tuple(int(x) for x in targets.split(",")) if targets else None,
                gen_length=int(items.pop("gen_length")) if "gen_length" in items else None,
                reuse=items.pop("reuse", None),
            )
        except ValueError as exc:
            raise ConfigError(f"[{section}]: {exc}") from exc
        if items:
            raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(items))}")
        runs.append(run)
    suite = AblationSuite(
        name=head.pop("name", name),
        runs=tuple(runs),
        base=base,
        probe_task=head.pop("probe_task", "band"),
        probe_steps=int(head.pop("probe_steps", 1000)),
        seed=int(head.pop("seed", 0)),
    )
    if head:
        raise ConfigError(f"unknown keys in [suite]: {', '.join(sorted(head))}")
    return suite


def load_suite(path_or_name: str) -> AblationSuite:
    if path_or_name in BUILTIN_SUITES:
        return builtin_suite(path_or_name)
    try:
        text = Path(path_or_name).read_text(encoding="utf-8")
    except OSError as exc:
        raise PersistenceError(f"{path_or_name}: {exc.strerror or exc}") from exc
    return parse_suite(text, Path(path_or_name).stem)
