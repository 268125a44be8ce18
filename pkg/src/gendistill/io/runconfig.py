"""Run configuration: INI-style sections of ``key = value`` pairs.

Every section may name a ``preset``; explicit keys override it. The canonical
form written by :func:`serialize` lists every resolved key, sections and keys
sorted, so ``parse(serialize(parse(text)))`` equals ``parse(text)``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..distill.config import DistillConfig
from ..errors import ConfigError, PersistenceError
from ..models.config import (
    BlockConfig,
    ConvFrontEndConfig,
    StudentConfig,
    StudentVariant,
    TeacherConfig,
    get_preset,
)
from .audio import SyntheticCorpus, SyntheticSpec, WavCorpus


@dataclass(frozen=True)
class DataConfig:
    source: str = "synthetic"
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    n_train: int = 256
    wav_dir: str = ""

    def corpus(self):
        if self.source == "synthetic":
            return SyntheticCorpus(self.synthetic, self.n_train)
        if self.source == "wav":
            return WavCorpus(self.wav_dir)
        raise ConfigError(f"unknown data source {self.source!r}")


@dataclass(frozen=True)
class OutputConfig:
    checkpoint: str = ""
    metrics: str = ""
    storage_dtype: str = "float64"

    def __post_init__(self):
        if self.storage_dtype not in ("float64", "float32"):
            raise ConfigError(f"storage_dtype must be float64 or float32, got {self.storage_dtype!r}")


@dataclass(frozen=True)
class RunConfig:
    teacher: TeacherConfig = field(default_factory=TeacherConfig)
    teacher_preset: str = "desk"
    student: StudentConfig = field(default_factory=StudentConfig)
    student_preset: str = "desk"
    student_seed: int = 0
    init_frontend_from_teacher: bool = True
    distill: DistillConfig = field(default_factory=lambda: desk_distill_config())
    data: DataConfig = field(default_factory=DataConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        self.distill.check_teacher_depth(self.teacher.n_layers)
        if self.teacher.block.d_model != self.student.block.d_model:
            raise ConfigError("teacher and student widths differ")
        v = self.student.variant
        if not v.autoregressive and v.n_targets != len(self.distill.target_layers):
            raise ConfigError(
                f"parallel variant has {v.n_targets} heads but {len(self.distill.target_layers)} target layers"
            )

    @classmethod
    def preset(cls, name: str = "desk", **distill_overrides) -> RunConfig:
        p = get_preset(name)
        distill = desk_distill_config() if name == "desk" else DistillConfig(
            target_layers=p.target_layers, batch_size=p.batch_size
        )
        return cls(
            teacher=TeacherConfig(p.frontend, p.block, p.teacher_layers, seed=0),
            teacher_preset=name,
            student=StudentConfig(frontend=p.frontend, block=p.block),
            student_preset=name,
            distill=replace(distill, **distill_overrides),
        )


def desk_distill_config(**overrides) -> DistillConfig:
    """Desk-scale training defaults (short budget, larger peak rate)."""
    base = DistillConfig(
        target_layers=(4, 8, 12), total_steps=2000, peak_lr=2.0e-3, batch_size=8, seed=3, val_every=100
    )
    return replace(base, **overrides)


# ------------------------------------------------------------------ value codecs


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    if hasattr(value, "value"):  # enums
        return str(value.value)
    return str(value)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(" ", "").split(",") if x)


def _conv_layers(text: str) -> tuple[tuple[int, int, int], ...]:
    out = []
    for item in text.replace(" ", "").split(","):
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != 3:
            raise ConfigError(f"conv layer {item!r} must be channels:kernel:stride")
        out.append(tuple(int(p) for p in parts))
    return tuple(out)


def _fmt_conv_layers(layers) -> str:
    return ",".join(f"{c}:{k}:{s}" for c, k, s in layers)


def _take(section: dict, key: str, conv, default):
    if key not in section:
        return default
    raw = section.pop(key)
    try:
        return conv(raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from exc


def _architecture(section: dict, preset_name: str) -> tuple[ConvFrontEndConfig, BlockConfig]:
    p = get_preset(preset_name)
    fe, blk = p.frontend, p.block
    fe = ConvFrontEndConfig(
        conv_layers=_take(section, "conv_layers", _conv_layers, fe.conv_layers),
        projection_dim=_take(section, "d_model", int, blk.d_model),
        use_group_norm_first_layer=_take(section, "group_norm_first_layer", _bool, fe.use_group_norm_first_layer),
        pos_conv_kernel=_take(section, "pos_conv_kernel", int, fe.pos_conv_kernel),
        pos_conv_groups=_take(section, "pos_conv_groups", int, fe.pos_conv_groups),
    )
    channels = _take(section, "conv_channels", int, None)
    if channels is not None:
        fe = fe.with_channels(channels)
    blk = BlockConfig(
        d_model=fe.projection_dim,
        n_heads=_take(section, "n_heads", int, blk.n_heads),
        ffn_hidden=_take(section, "ffn_hidden", int, blk.ffn_hidden),
    )
    return fe, blk


def _arch_items(fe: ConvFrontEndConfig, blk: BlockConfig) -> dict[str, str]:
    return {
        "conv_layers": _fmt_conv_layers(fe.conv_layers),
        "d_model": _fmt(blk.d_model),
        "group_norm_first_layer": _fmt(fe.use_group_norm_first_layer),
        "pos_conv_kernel": _fmt(fe.pos_conv_kernel),
        "pos_conv_groups": _fmt(fe.pos_conv_groups),
        "n_heads": _fmt(blk.n_heads),
        "ffn_hidden": _fmt(blk.ffn_hidden),
    }


def _leftover(name: str, section: dict) -> None:
    if section:
        raise ConfigError(f"unknown keys in [{name}]: {', '.join(sorted(section))}")


# ------------------------------------------------------------------ parse / serialize


def parse_sections(sections: dict[str, dict[str, str]]) -> RunConfig:
    known = {"teacher", "student", "distill", "data", "output"}
    unknown = set(sections) - known
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")
    sec = {k: dict(sections.get(k, {})) for k in known}

    t = sec["teacher"]
    t_preset = t.pop("preset", "desk")
    t_fe, t_blk = _architecture(t, t_preset)
    teacher = TeacherConfig(
        frontend=t_fe,
        block=t_blk,
        n_layers=_take(t, "n_layers", int, get_preset(t_preset).teacher_layers),
        seed=_take(t, "seed", int, 0),
    )
    _leftover("teacher", t)

    s = sec["student"]
    s_preset = s.pop("preset", t_preset)
    s_fe, s_blk = _architecture(s, s_preset)
    student = StudentConfig(
        variant=StudentVariant.from_name(s.pop("variant", "proposed")),
        frontend=s_fe,
        block=s_blk,
        step_embedding=_take(s, "step_embedding", int, 0),
    )
    student_seed = _take(s, "seed", int, 0)
    init_from_teacher = _take(s, "init_frontend_from_teacher", _bool, True)
    _leftover("student", s)

    d = sec["distill"]
    d_preset = d.pop("preset", t_preset)
    if d_preset == "desk":
        base = desk_distill_config()
    else:
        p = get_preset(d_preset)
        base = DistillConfig(target_layers=p.target_layers, batch_size=p.batch_size)
    kwargs = {}
    for f in fields(DistillConfig):
        key = "lambda" if f.name == "lam" else f.name
        if key in d:
            conv = {"target_layers": _int_list, "lam": float, "warmup_fraction": float,
                    "peak_lr": float, "reduction": str}.get(f.name, int)
            kwargs[f.name] = _take(d, key, conv, None)
    distill = replace(base, **kwargs)
    _leftover("distill", d)

    a = sec["data"]
    spec_kwargs = {}
    for f in fields(SyntheticSpec):
        if f.name in a:
            conv = float if f.type in ("float", float) else int
            spec_kwargs[f.name] = _take(a, f.name, conv, None)
    data = DataConfig(
        source=a.pop("source", "synthetic"),
        synthetic=SyntheticSpec(**spec_kwargs),
        n_train=_take(a, "n_train", int, 256),
        wav_dir=a.pop("wav_dir", ""),
    )
    _leftover("data", a)

    o = sec["output"]
    output = OutputConfig(
        checkpoint=o.pop("checkpoint", ""),
        metrics=o.pop("metrics", ""),
        storage_dtype=o.pop("storage_dtype", "float64"),
    )
    _leftover("output", o)

    return RunConfig(
        teacher=teacher,
        teacher_preset=t_preset,
        student=student,
        student_preset=s_preset,
        student_seed=student_seed,
        init_frontend_from_teacher=init_from_teacher,
        distill=distill,
        data=data,
        output=output,
    )


def to_sections(cfg: RunConfig) -> dict[str, dict[str, str]]:
    teacher = {"preset": cfg.teacher_preset, "n_layers": _fmt(cfg.teacher.n_layers), "seed": _fmt(cfg.teacher.seed)}
    teacher.update(_arch_items(cfg.teacher.frontend, cfg.teacher.block))
    student = {
        "preset": cfg.student_preset,
        "variant": cfg.student.variant.name,
        "seed": _fmt(cfg.student_seed),
        "step_embedding": _fmt(cfg.student.step_embedding),
        "init_frontend_from_teacher": _fmt(cfg.init_frontend_from_teacher),
    }
    student.update(_arch_items(cfg.student.frontend, cfg.student.block))
    distill = {("lambda" if f.name == "lam" else f.name): _fmt(getattr(cfg.distill, f.name))
               for f in fields(DistillConfig)}
    data = {f.name: _fmt(getattr(cfg.data.synthetic, f.name)) for f in fields(SyntheticSpec)}
    data.update(source=cfg.data.source, n_train=_fmt(cfg.data.n_train), wav_dir=cfg.data.wav_dir)
    output = {"checkpoint": cfg.output.checkpoint, "metrics": cfg.output.metrics,
              "storage_dtype": cfg.output.storage_dtype}
    return {"data": data, "distill": distill, "output": output, "student": student, "teacher": teacher}


def _read_sections(text: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return {name: dict(parser.items(name)) for name in parser.sections()}


def write_sections(sections: dict[str, dict[str, str]]) -> str:
    lines = []
    for name in sorted(sections):
        lines.append(f"[{name}]")
        for key in sorted(sections[name]):
            lines.append(f"{key} = {sections[name][key]}")
        lines.append("")
    return "\n".join(lines)


def parse(text: str) -> RunConfig:
    return parse_sections(_read_sections(text))


def serialize(cfg: RunConfig) -> str:
    return write_sections(to_sections(cfg))


def load(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PersistenceError(f"{path}: {exc.strerror or exc}") from exc
    return parse(text)
