"""Exact trainable-parameter counting."""

from __future__ import annotations

from .config import StudentConfig, TeacherConfig
from .layers import Init, Module


def count_params(obj) -> int:
    """Number of trainable scalars in a module, a ``StudentConfig`` or a ``TeacherConfig``.

    Configs are counted by building the architecture with zero-stride
    placeholder weights, so full-size models cost no memory.
    """
    if isinstance(obj, Module):
        return obj.num_parameters()
    if isinstance(obj, StudentConfig):
        from .student import StudentModel

        return StudentModel(obj, Init(mode="shape")).num_parameters()
    if isinstance(obj, TeacherConfig):
        from .teacher import TeacherModel

        model = TeacherModel(obj, Init(mode="shape"))
        return model.num_parameters()
    raise TypeError(f"cannot count parameters of {type(obj).__name__}")


def breakdown(obj) -> dict[str, int]:
    """Per top-level component counts, e.g. ``frontend.convs`` or ``block``."""
    if isinstance(obj, StudentConfig):
        from .student import StudentModel

        obj = StudentModel(obj, Init(mode="shape"))
    out: dict[str, int] = {}
    for name, t in obj.named_parameters():
        parts = name.split(".")
        key = ".".join(parts[:2]) if parts[0] == "frontend" else parts[0]
        out[key] = out.get(key, 0) + t.size
    return out


def format_millions(n: int) -> str:
    return f"{n / 1e6:.2f}M"
