import math

from ..errors import ContractError


def warmup_steps(total_steps: int, warmup_fraction: float) -> int:
    # round half up; Python's round() would send 0.5 to even
    return int(math.floor(warmup_fraction * total_steps + 0.5))


def lr_at(step: int, total_steps: int, peak_lr: float = 2.0e-4, warmup_fraction: float = 0.07) -> float:
    """Linear warmup from 0 to ``peak_lr`` over the first ``warmup_fraction`` of
    steps, then linear decay to 0 at ``total_steps``."""
    if not 0 <= step < total_steps:
        raise ContractError(f"step {step} outside [0, {total_steps})")
    w = warmup_steps(total_steps, warmup_fraction)
    if step < w:
        return peak_lr * (step / w)
    return peak_lr * ((total_steps - step) / (total_steps - w))
