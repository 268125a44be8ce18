"""Distillation loss, learning-rate schedule, optimizer and training loop."""

from .config import DistillConfig
from .loss import Reduction, cosine, layer_loss, layer_loss_terms, total_loss, total_loss_terms
from .optim import OptimizerState, adam_step
from .schedule import lr_at, warmup_steps
from .train import MetricsTrace, TraceRow, TrainResult, ValidationMetrics, build_models, distill, train, validate

__all__ = [
    "DistillConfig",
    "MetricsTrace",
    "OptimizerState",
    "Reduction",
    "TraceRow",
    "TrainResult",
    "ValidationMetrics",
    "adam_step",
    "build_models",
    "cosine",
    "distill",
    "layer_loss",
    "layer_loss_terms",
    "lr_at",
    "total_loss",
    "total_loss_terms",
    "train",
    "validate",
    "warmup_steps",
]
