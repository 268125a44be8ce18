"""Network building blocks on top of the tensor primitives."""

from __future__ import annotations

import math
from collections.abc import Iterator

import numpy as np

from ..tensor import Tensor, ops
from .config import BlockConfig, ConvFrontEndConfig


class Init:
    """Parameter factory.

    ``mode="random"`` draws from a seeded PCG64 stream in construction order;
    ``mode="shape"`` returns zero-stride placeholders so that full-size
    architectures can be counted without allocating them.
    """

    def __init__(self, seed: int | np.random.SeedSequence | None = 0, mode: str = "random", dtype=np.float64):
        if mode not in ("random", "shape"):
            raise ValueError(f"unknown init mode {mode!r}")
        self.mode = mode
        self.dtype = np.dtype(dtype)
        self.rng = np.random.Generator(np.random.PCG64(seed)) if mode == "random" else None

    def _placeholder(self, shape) -> np.ndarray:
        return np.broadcast_to(np.zeros((), dtype=self.dtype), shape)

    def uniform(self, shape, fan_in: int) -> Tensor:
        if self.rng is None:
            return Tensor(self._placeholder(shape), requires_grad=True)
        bound = 1.0 / math.sqrt(fan_in)
        return Tensor(self.rng.uniform(-bound, bound, size=shape).astype(self.dtype), requires_grad=True)

    def constant(self, shape, value: float) -> Tensor:
        if self.rng is None:
            return Tensor(self._placeholder(shape), requires_grad=True)
        return Tensor(np.full(shape, value, dtype=self.dtype), requires_grad=True)


class Module:
    """Parameter container; Tensor attributes are parameters, Module attributes children."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for key, value in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(value, Tensor):
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(name + ".")
            elif isinstance(value, list):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")

    def parameters(self) -> dict[str, Tensor]:
        return dict(self.named_parameters())

    def num_parameters(self) -> int:
        return sum(t.size for _, t in self.named_parameters())

    def freeze(self) -> None:
        for _, t in self.named_parameters():
            t.requires_grad = False


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, init: Init, bias: bool = True):
        self.weight = init.uniform((d_in, d_out), d_in)
        self.bias = init.uniform((d_out,), d_in) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = ops.matmul(x, self.weight)
        return y + self.bias if self.bias is not None else y


class LayerNorm(Module):
    def __init__(self, dim: int, init: Init, eps: float = 1e-5):
        self.gamma = init.constant((dim,), 1.0)
        self.beta = init.constant((dim,), 0.0)
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gamma, self.beta, self.eps)


def _split_heads(x: Tensor, n_heads: int) -> Tensor:
    *lead, t, d = x.shape
    x = x.reshape(tuple(lead) + (t, n_heads, d // n_heads))
    n = len(lead)
    return x.transpose(tuple(range(n)) + (n + 1, n, n + 2))


def _merge_heads(x: Tensor) -> Tensor:
    *lead, h, t, dh = x.shape
    n = len(lead)
    x = x.transpose(tuple(range(n)) + (n + 1, n, n + 2))
    return x.reshape(tuple(lead) + (t, h * dh))


class MultiHeadAttention(Module):
    """Unmasked scaled dot-product attention over the time axis."""

    def __init__(self, d_model: int, n_heads: int, init: Init):
        self.n_heads = n_heads
        self.q = Linear(d_model, d_model, init)
        self.k = Linear(d_model, d_model, init)
        self.v = Linear(d_model, d_model, init)
        self.out = Linear(d_model, d_model, init)

    def __call__(self, x: Tensor, memory: Tensor | None = None) -> Tensor:
        kv = x if memory is None else memory
        q = _split_heads(self.q(x), self.n_heads)
        k = _split_heads(self.k(kv), self.n_heads)
        v = _split_heads(self.v(kv), self.n_heads)
        scale = 1.0 / math.sqrt(q.shape[-1])
        kt = k.transpose(tuple(range(k.ndim - 2)) + (k.ndim - 1, k.ndim - 2))
        weights = ops.softmax(ops.matmul(q, kt) * scale, axis=-1)
        return self.out(_merge_heads(ops.matmul(weights, v)))


class FeedForward(Module):
    def __init__(self, d_model: int, hidden: int, init: Init):
        self.fc1 = Linear(d_model, hidden, init)
        self.fc2 = Linear(hidden, d_model, init)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(ops.gelu(self.fc1(x)))


class TransformerBlock(Module):
    """Pre-norm encoder block, optionally with cross-attention to a memory sequence."""

    def __init__(self, cfg: BlockConfig, init: Init, cross_attention: bool = False):
        self.norm1 = LayerNorm(cfg.d_model, init)
        self.attn = MultiHeadAttention(cfg.d_model, cfg.n_heads, init)
        if cross_attention:
            self.norm_cross = LayerNorm(cfg.d_model, init)
            self.cross_attn = MultiHeadAttention(cfg.d_model, cfg.n_heads, init)
        self.norm2 = LayerNorm(cfg.d_model, init)
        self.ffn = FeedForward(cfg.d_model, cfg.ffn_hidden, init)

    @property
    def has_cross_attention(self) -> bool:
        return hasattr(self, "cross_attn")

    def __call__(self, x: Tensor, memory: Tensor | None = None) -> Tensor:
        x = x + self.attn(self.norm1(x))
        if self.has_cross_attention:
            if memory is None:
                raise ValueError("cross-attention block needs a memory sequence")
            x = x + self.cross_attn(self.norm_cross(x), memory)
        return x + self.ffn(self.norm2(x))


class OutputHead(Module):
    """Linear, GELU, linear; maps width D back to D through an inner width."""

    def __init__(self, d_model: int, init: Init, inner: int | None = None):
        inner = inner or d_model
        self.fc1 = Linear(d_model, inner, init)
        self.fc2 = Linear(inner, d_model, init)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(ops.gelu(self.fc1(x)))


class ConvFrontEnd(Module):
    """Waveform to frame embeddings ``f``.

    Conv stack (GELU after each layer, per-channel normalisation over time on
    the first), layer norm over channels, linear projection to the model width,
    then a grouped positional convolution added residually and a final layer
    norm.
    """

    def __init__(self, cfg: ConvFrontEndConfig, init: Init):
        self.cfg = cfg
        self.convs: list[_Conv] = []
        c_in = 1
        for i, (c_out, k, s) in enumerate(cfg.conv_layers):
            gn = cfg.use_group_norm_first_layer and i == 0
            self.convs.append(_Conv(c_in, c_out, k, s, init, group_norm=gn))
            c_in = c_out
        self.feature_norm = LayerNorm(c_in, init)
        self.proj = Linear(c_in, cfg.projection_dim, init)
        d = cfg.projection_dim
        if cfg.pos_conv_kernel:
            fan_in = cfg.pos_conv_kernel * d // cfg.pos_conv_groups
            self.pos_weight = init.uniform((d, d // cfg.pos_conv_groups, cfg.pos_conv_kernel), fan_in)
            self.pos_bias = init.uniform((d,), fan_in)
        self.norm = LayerNorm(d, init)

    def conv_features(self, wave: Tensor) -> Tensor:
        """``[..., samples]`` to ``[..., T, C]`` conv features."""
        x = wave.reshape(wave.shape[:-1] + (1, wave.shape[-1]))
        for conv in self.convs:
            x = conv(x)
        n = x.ndim
        return x.transpose(tuple(range(n - 2)) + (n - 1, n - 2))

    def positional(self, x: Tensor) -> Tensor:
        k = self.cfg.pos_conv_kernel
        n = x.ndim
        swap = tuple(range(n - 2)) + (n - 1, n - 2)
        y = ops.pad_last(x.transpose(swap), k // 2, k // 2)
        y = ops.conv1d(y, self.pos_weight, self.pos_bias, stride=1, groups=self.cfg.pos_conv_groups)
        if k % 2 == 0:
            y = y[..., :-1]
        return ops.gelu(y).transpose(swap)

    def __call__(self, wave: Tensor) -> Tensor:
        x = self.proj(self.feature_norm(self.conv_features(wave)))
        if self.cfg.pos_conv_kernel:
            x = x + self.positional(x)
        return self.norm(x)


class _Conv(Module):
    def __init__(self, c_in: int, c_out: int, kernel: int, stride: int, init: Init, group_norm: bool):
        self.stride = stride
        self.weight = init.uniform((c_out, c_in, kernel), c_in * kernel)
        if group_norm:
            self.gn_gamma = init.constant((c_out,), 1.0)
            self.gn_beta = init.constant((c_out,), 0.0)

    def __call__(self, x: Tensor) -> Tensor:
        y = ops.conv1d(x, self.weight, stride=self.stride)
        if hasattr(self, "gn_gamma"):
            c = self.gn_gamma.shape[0]
            y = ops.standardize(y) * self.gn_gamma.reshape(c, 1) + self.gn_beta.reshape(c, 1)
        return ops.gelu(y)
