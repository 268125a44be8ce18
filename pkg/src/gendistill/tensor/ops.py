"""Differentiable primitives.

Every function takes :class:`Tensor` (or array-like) arguments and returns a
new :class:`Tensor`. Elementwise binary ops broadcast like numpy.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import special

from ..errors import DimensionError, InputTooShortError
from .core import Tensor, as_tensor, make_result

_SQRT_HALF = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _pair(a, b) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        b = Tensor(np.asarray(b, dtype=a.dtype))
    elif isinstance(b, Tensor) and not isinstance(a, Tensor):
        a = Tensor(np.asarray(a, dtype=b.dtype))
    return as_tensor(a), as_tensor(b)


# ---------------------------------------------------------------- arithmetic


def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    return make_result(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    return make_result(
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    return make_result(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def div(a, b) -> Tensor:
    a, b = _pair(a, b)
    out = a.data / b.data

    def vjp(g):
        return _unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)

    return make_result(out, (a, b), vjp)


def neg(a) -> Tensor:
    a = as_tensor(a)
    return make_result(-a.data, (a,), lambda g: (-g,))


def matmul(a, b) -> Tensor:
    """Matrix product over the last two axes; leading axes broadcast."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    out = np.matmul(a.data, b.data)

    def vjp(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return make_result(out, (a, b), vjp)


# ---------------------------------------------------------------- reductions and shape


def _norm_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def sum(a, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    axes = _norm_axis(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return make_result(out, (a,), vjp)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axis(axis, a.ndim)
    count = 1
    for ax in axes:
        count *= a.shape[ax]
    return sum(a, axis=axes, keepdims=keepdims) * (1.0 / count)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    return make_result(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes=None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return make_result(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def getitem(a, index) -> Tensor:
    a = as_tensor(a)

    def vjp(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        return (full,)

    return make_result(a.data[index], (a,), vjp)


def pad_last(a, left: int, right: int) -> Tensor:
    """Zero-pad the last axis."""
    a = as_tensor(a)
    widths = [(0, 0)] * (a.ndim - 1) + [(left, right)]
    n = a.shape[-1]
    return make_result(np.pad(a.data, widths), (a,), lambda g: (g[..., left : left + n],))


def stack(tensors, axis: int = 0) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    out = np.stack([t.data for t in tensors], axis=axis)

    def vjp(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return make_result(out, tensors, vjp)


# ---------------------------------------------------------------- elementwise


def abs(a) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    return make_result(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    out = np.sqrt(a.data)
    return make_result(out, (a,), lambda g: (g * 0.5 / out,))


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return make_result(out, (a,), lambda g: (g * out,))


def log(a) -> Tensor:
    a = as_tensor(a)
    return make_result(np.log(a.data), (a,), lambda g: (g / a.data,))


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp values; the gradient passes straight through.

    Intended only for guarding rounding excursions (e.g. a cosine of
    1 + 2**-52), where zeroing the gradient would be wrong.
    """
    a = as_tensor(a)
    return make_result(np.clip(a.data, lo, hi), (a,), lambda g: (g,))


def gelu(a) -> Tensor:
    """Exact GELU, ``x * Phi(x)`` with the erf form of the normal CDF."""
    a = as_tensor(a)
    x = a.data
    cdf = 0.5 * (1.0 + special.erf(x * _SQRT_HALF))
    out = x * cdf

    def vjp(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
        return (g * (cdf + x * pdf),)

    return make_result(out, (a,), vjp)


def log_sigmoid(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    out = -np.logaddexp(0.0, -x)
    return make_result(out, (a,), lambda g: (g * special.expit(-x),))


# ---------------------------------------------------------------- normalisation


def standardize(a, eps: float = 1e-5) -> Tensor:
    """Zero mean, unit (biased) variance along the last axis."""
    a = as_tensor(a)
    x = a.data
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv

    def vjp(g):
        gm = g.mean(axis=-1, keepdims=True)
        gx = (g * xhat).mean(axis=-1, keepdims=True)
        return (inv * (g - gm - xhat * gx),)

    return make_result(xhat, (a,), vjp)


def layer_norm(x, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Per-row normalisation over the last axis followed by ``gamma * x + beta``."""
    x = as_tensor(x)
    return standardize(x, eps) * gamma + beta


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    x = a.data
    e = np.exp(x - x.max(axis=axis, keepdims=True))
    out = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return make_result(out, (a,), vjp)


def log_softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    x = a.data
    shifted = x - x.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def vjp(g):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return make_result(out, (a,), vjp)


# ---------------------------------------------------------------- convolution


def conv_output_length(length: int, kernel: int, stride: int) -> int:
    if length < kernel:
        raise InputTooShortError(f"input length {length} shorter than kernel {kernel}")
    return (length - kernel) // stride + 1


def conv1d(x, w, bias=None, stride: int = 1, groups: int = 1) -> Tensor:
    """Grouped valid-mode cross-correlation.

    ``x`` is ``[C_in, T]`` or ``[B, C_in, T]``; ``w`` is ``[C_out, C_in // groups, K]``.
    """
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim not in (2, 3) or w.ndim != 3:
        raise DimensionError(f"conv1d expects x [C,T] or [B,C,T] and w [O,I,K], got {x.shape}, {w.shape}")
    c_out, c_per, k = w.shape
    c_in, length = x.shape[-2], x.shape[-1]
    if c_in % groups or c_out % groups or c_per * groups != c_in:
        raise DimensionError(f"conv1d channel mismatch: x {x.shape}, w {w.shape}, groups={groups}")
    if stride < 1:
        raise DimensionError(f"stride must be >= 1, got {stride}")
    t_out = conv_output_length(length, k, stride)
    lead = x.shape[:-2]
    o_per = c_out // groups

    xd = x.data.reshape(lead + (groups, c_per, length))
    windows = sliding_window_view(xd, k, axis=-1)[..., : (t_out - 1) * stride + 1 : stride, :]
    wg = w.data.reshape(groups, o_per, c_per, k)
    out = np.einsum("...gctk,gock->...got", windows, wg, optimize=True)
    out = out.reshape(lead + (c_out, t_out))
    inputs: tuple[Tensor, ...] = (x, w)
    if bias is not None:
        bias = as_tensor(bias)
        out = out + bias.data[:, None]
        inputs = (x, w, bias)

    def vjp(g):
        gg = g.reshape(lead + (groups, o_per, t_out))
        batch_axes = "".join("abcdef"[: len(lead)])
        gw = np.einsum(f"{batch_axes}got,{batch_axes}gctk->gock", gg, windows, optimize=True)
        gwin = np.einsum("...got,gock->...gctk", gg, wg, optimize=True)
        gx = np.zeros(lead + (groups, c_per, length), dtype=xd.dtype)
        stop = (t_out - 1) * stride + 1
        for j in range(k):
            gx[..., j : j + stop : stride] += gwin[..., j]
        grads = [gx.reshape(x.shape), gw.reshape(w.shape)]
        if bias is not None:
            grads.append(g.sum(axis=tuple(range(len(lead))) + (g.ndim - 1,)))
        return grads

    return make_result(out, inputs, vjp)
