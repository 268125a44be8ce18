"""Dense tensors with tape-based reverse-mode differentiation."""

from . import ops
from .core import DEFAULT_DTYPE, Tape, Tensor, as_tensor, backward, no_grad
from .gradcheck import finite_diff_check
from .ops import (
    conv1d,
    conv_output_length,
    gelu,
    layer_norm,
    log_sigmoid,
    log_softmax,
    matmul,
    softmax,
    standardize,
)

__all__ = [
    "DEFAULT_DTYPE",
    "Tape",
    "Tensor",
    "as_tensor",
    "backward",
    "conv1d",
    "conv_output_length",
    "finite_diff_check",
    "gelu",
    "layer_norm",
    "log_sigmoid",
    "log_softmax",
    "matmul",
    "no_grad",
    "ops",
    "softmax",
    "standardize",
]
