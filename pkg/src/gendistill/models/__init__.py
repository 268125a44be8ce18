"""Teacher encoder, student variants and parameter counting."""

from .config import (
    DESK,
    FULL_SIZE,
    PRESETS,
    PROPOSED,
    VARIANTS,
    BlockConfig,
    ConvFrontEndConfig,
    Preset,
    StudentConfig,
    StudentVariant,
    TeacherConfig,
    get_preset,
)
from .layers import ConvFrontEnd, Init, Linear, Module, OutputHead, TransformerBlock
from .params import breakdown, count_params, format_millions
from .student import StudentModel, build_student, generate_sequence, generate_step
from .teacher import LayerStack, TeacherModel, build_teacher, extract_features, teacher_forward

__all__ = [
    "DESK",
    "FULL_SIZE",
    "PRESETS",
    "PROPOSED",
    "VARIANTS",
    "BlockConfig",
    "ConvFrontEnd",
    "ConvFrontEndConfig",
    "Init",
    "LayerStack",
    "Linear",
    "Module",
    "OutputHead",
    "Preset",
    "StudentConfig",
    "StudentModel",
    "StudentVariant",
    "TeacherConfig",
    "TeacherModel",
    "TransformerBlock",
    "breakdown",
    "build_student",
    "build_teacher",
    "count_params",
    "extract_features",
    "format_millions",
    "generate_sequence",
    "generate_step",
    "get_preset",
    "teacher_forward",
]
