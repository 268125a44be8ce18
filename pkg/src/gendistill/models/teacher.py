"""Frozen WavLM-shaped teacher encoder."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..tensor import Tensor, as_tensor, no_grad
from .config import TeacherConfig
from .layers import ConvFrontEnd, Init, Module, TransformerBlock


@dataclass
class LayerStack:
    """Feature embedding ``f`` plus the per-block outputs ``h^1 .. h^L``."""

    f: Tensor
    hidden: list[Tensor] = field(default_factory=list)

    @property
    def n_layers(self) -> int:
        return len(self.hidden)

    def select(self, layers) -> list[Tensor]:
        """Hidden outputs for 1-based layer indices."""
        out = []
        for idx in layers:
            if not 1 <= idx <= self.n_layers:
                raise ConfigError(f"target layer {idx} outside [1, {self.n_layers}]")
            out.append(self.hidden[idx - 1])
        return out


class TeacherModel(Module):
    def __init__(self, cfg: TeacherConfig, init: Init):
        self.cfg = cfg
        self.frontend = ConvFrontEnd(cfg.frontend, init)
        self.blocks = [TransformerBlock(cfg.block, init) for _ in range(cfg.n_layers)]
        self.freeze()

    def __call__(self, wave) -> LayerStack:
        return teacher_forward(wave, self)


def build_teacher(cfg: TeacherConfig, init_mode: str = "random") -> TeacherModel:
    seq = np.random.SeedSequence([cfg.seed, 0x7EAC])
    return TeacherModel(cfg, Init(seq, mode=init_mode))


def extract_features(wave, frontend: ConvFrontEnd) -> Tensor:
    """Frame embeddings ``[..., T, D]`` for a waveform ``[..., samples]``."""
    return frontend(as_tensor(wave))


def teacher_forward(wave, teacher: TeacherModel) -> LayerStack:
    with no_grad():
        f = extract_features(wave, teacher.frontend)
        hidden = []
        x = f
        for block in teacher.blocks:
            x = block(x)
            hidden.append(x)
    return LayerStack(f, hidden)
