"""Central finite-difference verification of tape gradients."""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from .core import Tape, Tensor, no_grad

ABS_FALLBACK = 1e-8


def numerical_gradient(fn: Callable[..., Tensor], inputs: Sequence[Tensor], index: int,
                       coord: tuple[int, ...], h: float) -> float:
    x = inputs[index].data
    orig = x[coord]
    with no_grad():
        x[coord] = orig + h
        f_plus = fn(*inputs).item()
        x[coord] = orig - h
        f_minus = fn(*inputs).item()
    x[coord] = orig
    return (f_plus - f_minus) / (2.0 * h)


def relative_error(analytic: float, numeric: float) -> float:
    scale = max(abs(analytic), abs(numeric))
    diff = abs(analytic - numeric)
    if scale < ABS_FALLBACK:
        return diff
    return diff / scale


def finite_diff_check(fn: Callable[..., Tensor], inputs: Sequence[Tensor], h: float = 1e-5,
                      max_coords: int | None = None, rng: np.random.Generator | None = None) -> float:
    """Max relative error between tape gradients and central differences.

    ``fn`` maps the ``inputs`` tensors to a scalar tensor. Inputs are
    perturbed in place and restored. With ``max_coords`` set, at most that many
    coordinates per input are probed, drawn from ``rng``.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    for t in inputs:
        t.requires_grad = True
    with Tape() as tape:
        out = fn(*inputs)
    analytic = tape.gradient(out, list(inputs))

    worst = 0.0
    for i, t in enumerate(inputs):
        coords = list(np.ndindex(*t.shape))
        if max_coords is not None and len(coords) > max_coords:
            rng = rng or np.random.default_rng(0)
            pick = rng.choice(len(coords), size=max_coords, replace=False)
            coords = [coords[j] for j in sorted(pick)]
        for c in coords:
            num = numerical_gradient(fn, inputs, i, c, h)
            worst = max(worst, relative_error(float(analytic[i][c]), num))
    return worst
