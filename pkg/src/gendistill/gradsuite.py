"""Finite-difference checks for every differentiable primitive and the full student loss."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from .distill.loss import cosine, layer_loss, total_loss
from .models import BlockConfig, ConvFrontEndConfig, build_student
from .models.layers import Init, MultiHeadAttention, TransformerBlock
from .tensor import Tensor, finite_diff_check, ops

STEP = 1e-5
TOLERANCE = 1e-5

# a student small enough to probe coordinate by coordinate
TINY_FRONTEND = ConvFrontEndConfig(conv_layers=((4, 4, 2), (4, 3, 2)), projection_dim=8,
                                   pos_conv_kernel=4, pos_conv_groups=2)
TINY_BLOCK = BlockConfig(d_model=8, n_heads=2, ffn_hidden=16)


def _projected(out: Tensor, rng: np.random.Generator) -> Tensor:
    """Random linear functional of ``out`` so every output coordinate matters."""
    return ops.sum(out * Tensor(rng.standard_normal(out.shape)))


def _case_matmul(rng):
    a, b = Tensor(rng.standard_normal((5, 4))), Tensor(rng.standard_normal((4, 3)))
    return (lambda a, b: _projected(ops.matmul(a, b), np.random.default_rng(7))), [a, b]


def _unary(op: Callable[[Tensor], Tensor], shape=(3, 5), positive=False, away_from_zero=False):
    def case(rng):
        x = rng.standard_normal(shape)
        if positive:
            x = np.abs(x) + 0.5
        if away_from_zero:
            x = np.sign(x) * (np.abs(x) + 0.1)
        return (lambda t: _projected(op(t), np.random.default_rng(11))), [Tensor(x)]

    return case


def _case_arith(rng):
    a = Tensor(rng.standard_normal((3, 4)))
    b = Tensor(rng.standard_normal((4,)))
    c = Tensor(np.abs(rng.standard_normal((3, 1))) + 0.5)

    def fn(a, b, c):
        return _projected((a * b - a) / c + b, np.random.default_rng(5))

    return fn, [a, b, c]


def _case_reductions(rng):
    x = Tensor(rng.standard_normal((2, 3, 4)))

    def fn(x):
        y = ops.mean(x, axis=1) + ops.sum(x.transpose(0, 2, 1), axis=-1)
        z = ops.pad_last(x.reshape(6, 4), 1, 2)[1:, ::2]
        return _projected(y, np.random.default_rng(3)) + _projected(z, np.random.default_rng(4))

    return fn, [x]


def _case_layer_norm(rng):
    x = Tensor(rng.standard_normal((4, 6)))
    g, b = Tensor(rng.standard_normal(6)), Tensor(rng.standard_normal(6))
    return (lambda x, g, b: _projected(ops.layer_norm(x, g, b, 1e-5), np.random.default_rng(9))), [x, g, b]


def _case_conv1d(rng):
    x = Tensor(rng.standard_normal((2, 4, 13)))
    w = Tensor(rng.standard_normal((6, 2, 3)))
    b = Tensor(rng.standard_normal(6))
    return (lambda x, w, b: _projected(ops.conv1d(x, w, b, stride=2, groups=2), np.random.default_rng(1))), [x, w, b]


def _case_cosine(rng):
    u, v = Tensor(rng.standard_normal((4, 3))), Tensor(rng.standard_normal((4, 3)))
    return (lambda u, v: _projected(cosine(u, v), np.random.default_rng(2))), [u, v]


def _case_layer_loss(rng):
    p, t = Tensor(rng.standard_normal((4, 3))), Tensor(rng.standard_normal((4, 3)))
    return (lambda p, t: layer_loss(p, t, 1.0)), [p, t]


def _case_attention(rng):
    init = Init(int(rng.integers(1 << 31)))
    attn = MultiHeadAttention(8, 2, init)
    x = Tensor(rng.standard_normal((5, 8)))
    params = list(attn.parameters().values())

    def fn(x, *ps):
        return _projected(attn(x), np.random.default_rng(6))

    return fn, [x, *params]


def _case_block(rng):
    init = Init(int(rng.integers(1 << 31)))
    block = TransformerBlock(TINY_BLOCK, init, cross_attention=True)
    x, mem = Tensor(rng.standard_normal((5, 8))), Tensor(rng.standard_normal((6, 8)))
    params = list(block.parameters().values())

    def fn(x, mem, *ps):
        return _projected(block(x, mem), np.random.default_rng(8))

    return fn, [x, mem, *params]


def _case_student(rng):
    student = build_student("proposed", TINY_FRONTEND, TINY_BLOCK, seed=int(rng.integers(1 << 31)))
    wave = rng.standard_normal(48)
    f_len = TINY_FRONTEND.num_frames(48)
    targets = [Tensor(rng.standard_normal((f_len, 8))) for _ in range(3)]
    params = list(student.parameters().values())

    def fn(*ps):
        _, preds = student(wave, 3)
        return total_loss(preds, targets, 1.0)

    return fn, params


CASES: dict[str, tuple[Callable, int | None]] = {
    "matmul": (_case_matmul, None),
    "add/sub/mul/div": (_case_arith, None),
    "sum/mean/reshape/transpose/pad/slice": (_case_reductions, None),
    "gelu": (_unary(ops.gelu), None),
    "exp": (_unary(ops.exp), None),
    "log": (_unary(ops.log, positive=True), None),
    "sqrt": (_unary(ops.sqrt, positive=True), None),
    "abs": (_unary(ops.abs, away_from_zero=True), None),
    "log_sigmoid": (_unary(ops.log_sigmoid), None),
    "softmax": (_unary(lambda t: ops.softmax(t, axis=-1)), None),
    "log_softmax": (_unary(lambda t: ops.log_softmax(t, axis=0)), None),
    "standardize": (_unary(ops.standardize), None),
    "layer_norm": (_case_layer_norm, None),
    "conv1d": (_case_conv1d, None),
    "cosine": (_case_cosine, None),
    "layer_loss": (_case_layer_loss, None),
    "attention": (_case_attention, 12),
    "transformer_block": (_case_block, 8),
    "student+total_loss": (_case_student, 6),
}


def run_gradcheck(seed: int = 0, n_seeds: int = 10, h: float = STEP) -> dict[str, float]:
    """Max relative error per case over ``n_seeds`` seeds starting at ``seed``."""
    results: dict[str, float] = {}
    for name, (make, max_coords) in CASES.items():
        worst = 0.0
        for s in range(seed, seed + n_seeds):
            rng = np.random.default_rng([s, len(name)])
            fn, inputs = make(rng)
            err = finite_diff_check(fn, inputs, h=h, max_coords=max_coords, rng=np.random.default_rng(s))
            worst = max(worst, err)
        results[name] = worst
    return results
