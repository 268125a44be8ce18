"""Per-layer distillation loss: L1 distance plus negative log-sigmoid cosine."""

from __future__ import annotations

from enum import Enum

import numpy as np

from ..errors import DegenerateVectorError, DimensionError
from ..tensor import Tensor, as_tensor, ops


class Reduction(str, Enum):
    SUM_T = "sum_t"
    MEAN_T_AND_L = "mean_t_and_l"


def cosine(u, v) -> Tensor:
    """Cosine similarity along the last axis, clamped to [-1, 1]."""
    u, v = as_tensor(u), as_tensor(v)
    if u.shape != v.shape:
        raise DimensionError(f"cosine shape mismatch: {u.shape} vs {v.shape}")
    nu = ops.sqrt(ops.sum(u * u, axis=-1))
    nv = ops.sqrt(ops.sum(v * v, axis=-1))
    if np.any(nu.data == 0) or np.any(nv.data == 0):
        raise DegenerateVectorError("cosine similarity of a zero-norm vector")
    return ops.clip(ops.sum(u * v, axis=-1) / (nu * nv), -1.0, 1.0)


def layer_loss_terms(pred, target, lam: float = 1.0,
                     reduction: Reduction | str = Reduction.MEAN_T_AND_L) -> tuple[Tensor, Tensor]:
    """``(l1_term, cos_term)`` for one layer; their sum is the layer loss.

    Inputs are ``[T, D]`` or batched ``[B, T, D]``. Per utterance, frames are
    summed (``SUM_T``) or averaged (``MEAN_T_AND_L``); batches are averaged.
    ``cos_term`` already carries the ``lam`` weight.
    """
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape or pred.ndim not in (2, 3):
        raise DimensionError(f"layer_loss expects matching [T,D] or [B,T,D], got {pred.shape} vs {target.shape}")
    reduction = Reduction(reduction)
    l1 = ops.mean(ops.abs(pred - target), axis=-1)
    if lam:
        cos = -ops.log_sigmoid(cosine(pred, target)) * lam
    else:
        cos = Tensor(np.zeros(l1.shape, dtype=l1.dtype))
    frame_axis = pred.ndim - 2
    if reduction is Reduction.SUM_T:
        l1, cos = ops.sum(l1, axis=frame_axis), ops.sum(cos, axis=frame_axis)
    else:
        l1, cos = ops.mean(l1, axis=frame_axis), ops.mean(cos, axis=frame_axis)
    if pred.ndim == 3:
        l1, cos = ops.mean(l1), ops.mean(cos)
    return l1, cos


def layer_loss(pred, target, lam: float = 1.0, reduction: Reduction | str = Reduction.SUM_T) -> Tensor:
    """Loss for one layer; the default reduction sums over frames."""
    l1, cos = layer_loss_terms(pred, target, lam, reduction)
    return l1 + cos


def total_loss_terms(preds, targets, lam: float = 1.0,
                     reduction: Reduction | str = Reduction.MEAN_T_AND_L) -> tuple[Tensor, list[Tensor], list[Tensor]]:
    """Total loss plus the per-layer L1 and cosine terms it is made of."""
    if len(preds) != len(targets):
        raise DimensionError(f"{len(preds)} predictions for {len(targets)} targets")
    if not preds:
        raise DimensionError("total_loss needs at least one layer")
    reduction = Reduction(reduction)
    l1s, coss = [], []
    for p, t in zip(preds, targets):
        l1, cos = layer_loss_terms(p, t, lam, reduction)
        l1s.append(l1)
        coss.append(cos)
    total = l1s[0] + coss[0]
    for l1, cos in zip(l1s[1:], coss[1:]):
        total = total + l1 + cos
    if reduction is Reduction.MEAN_T_AND_L:
        total = total * (1.0 / len(preds))
    return total, l1s, coss


def total_loss(preds, targets, lam: float = 1.0, reduction: Reduction | str = Reduction.MEAN_T_AND_L) -> Tensor:
    """``SUM_T``: sum of per-layer losses; ``MEAN_T_AND_L``: mean over layers of time-averaged losses."""
    return total_loss_terms(preds, targets, lam, reduction)[0]
