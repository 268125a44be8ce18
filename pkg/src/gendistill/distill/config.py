from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError
from .loss import Reduction


@dataclass(frozen=True)
class DistillConfig:
    """Training hyperparameters; defaults follow the full-size recipe."""

    target_layers: tuple[int, ...] = (4, 8, 12)
    lam: float = 1.0
    total_steps: int = 200_000
    warmup_fraction: float = 0.07
    peak_lr: float = 2.0e-4
    batch_size: int = 24
    seed: int = 0
    reduction: Reduction = Reduction.MEAN_T_AND_L
    val_every: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "target_layers", tuple(int(x) for x in self.target_layers))
        object.__setattr__(self, "reduction", Reduction(self.reduction))
        layers = self.target_layers
        if not layers:
            raise ConfigError("target_layers must not be empty")
        if any(b <= a for a, b in zip(layers, layers[1:])) or layers[0] < 1:
            raise ConfigError(f"target_layers must be strictly increasing and >= 1, got {layers}")
        if self.lam < 0:
            raise ConfigError("lambda must be >= 0")
        if self.total_steps < 1:
            raise ConfigError("total_steps must be >= 1")
        if not 0 < self.warmup_fraction < 1:
            raise ConfigError("warmup_fraction must lie in (0, 1)")
        if self.peak_lr <= 0 or self.batch_size < 1 or self.val_every < 1:
            raise ConfigError("peak_lr, batch_size and val_every must be positive")

    def check_teacher_depth(self, n_layers: int) -> None:
        if self.target_layers[-1] > n_layers:
            raise ConfigError(f"target layer {self.target_layers[-1]} exceeds teacher depth {n_layers}")
