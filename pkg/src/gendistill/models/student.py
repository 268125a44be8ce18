"""Student: one shared block that generates teacher layers in sequence."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ContractError
from ..tensor import Tensor, as_tensor
from .config import BlockConfig, ConvFrontEndConfig, StudentConfig, StudentVariant
from .layers import ConvFrontEnd, Init, Linear, Module, OutputHead, TransformerBlock
from .teacher import TeacherModel, extract_features


class StudentModel(Module):
    def __init__(self, cfg: StudentConfig, init: Init):
        self.cfg = cfg
        # number of target layers the weights were distilled against; 0 if untrained
        self.trained_target_count = 0
        v = cfg.variant
        d = cfg.block.d_model
        self.frontend = ConvFrontEnd(cfg.frontend, init)
        if v.autoregressive:
            self.block = TransformerBlock(cfg.block, init, cross_attention=v.cross_attention)
            if v.output_head:
                self.head = OutputHead(d, init)
            if cfg.step_embedding:
                self.step_embed = init.constant((cfg.step_embedding, d), 0.0)
        else:
            self.blocks = [TransformerBlock(cfg.block, init) for _ in range(v.n_blocks)]
            self.heads = [Linear(d, d, init) for _ in range(v.n_targets)]

    @property
    def variant(self) -> StudentVariant:
        return self.cfg.variant

    def features(self, wave) -> Tensor:
        return extract_features(wave, self.frontend)

    def predict(self, f: Tensor, n: int | None = None) -> list[Tensor]:
        """Predicted layers from ``f``; ``n`` is the generation length for
        autoregressive variants and must equal ``n_targets`` (or be None) for
        parallel ones."""
        v = self.variant
        if v.autoregressive:
            if n is None:
                raise ContractError("autoregressive prediction needs a generation length")
            return generate_sequence(f, n, self)
        if n is not None and n != v.n_targets:
            raise ContractError(f"parallel variant predicts exactly {v.n_targets} layers, asked for {n}")
        outs = [f]
        x = f
        for block in self.blocks:
            x = block(x)
            outs.append(x)
        return [head(src) for head, src in zip(self.heads, outs[-v.n_targets :])]

    def __call__(self, wave, n: int | None = None) -> tuple[Tensor, list[Tensor]]:
        f = self.features(wave)
        return f, self.predict(f, n)


def generate_step(h_prev: Tensor, model: StudentModel, memory: Tensor | None = None,
                  step: int | None = None) -> Tensor:
    """One application of ``O(F(h) + h)`` with the variant's skip/head flags.

    ``memory`` is the feature embedding ``f``, needed only by the
    cross-attention variant; ``step`` (0-based) indexes the optional step
    embedding.
    """
    if not model.variant.autoregressive:
        raise ContractError(f"generate_step needs an autoregressive variant, got {model.variant.name}")
    x = h_prev
    if hasattr(model, "step_embed"):
        if step is None or not 0 <= step < model.step_embed.shape[0]:
            raise ContractError(f"step {step} outside the step-embedding table")
        x = x + model.step_embed[step]
    y = model.block(x, memory)
    if model.variant.skip:
        y = y + h_prev
    if model.variant.output_head:
        y = model.head(y)
    return y


def generate_sequence(f: Tensor, n: int, model: StudentModel) -> list[Tensor]:
    """``n`` layers generated autoregressively from ``f``; the teacher is never used."""
    if n < 0:
        raise ContractError(f"generation length must be >= 0, got {n}")
    f = as_tensor(f)
    memory = f if model.variant.cross_attention else None
    out: list[Tensor] = []
    h = f
    for step in range(n):
        h = generate_step(h, model, memory=memory, step=step)
        out.append(h)
    return out


def build_student(variant: StudentVariant | str, frontend: ConvFrontEndConfig, block: BlockConfig,
                  seed: int = 0, *, teacher: TeacherModel | None = None, step_embedding: int = 0,
                  init_mode: str = "random") -> StudentModel:
    """Construct a student; with ``teacher`` given, its front-end weights seed the student's."""
    if isinstance(variant, str):
        variant = StudentVariant.from_name(variant)
    cfg = StudentConfig(variant=variant, frontend=frontend, block=block, step_embedding=step_embedding)
    model = StudentModel(cfg, Init(np.random.SeedSequence([seed, 0x57D]), mode=init_mode))
    if teacher is not None:
        copy_frontend(teacher.frontend, model.frontend)
    return model


def copy_frontend(src: ConvFrontEnd, dst: ConvFrontEnd) -> None:
    if src.cfg != dst.cfg:
        raise ConfigError("teacher and student front ends differ; cannot copy weights")
    dst_params = dst.parameters()
    for name, t in src.parameters().items():
        dst_params[name].data = t.data.copy()
