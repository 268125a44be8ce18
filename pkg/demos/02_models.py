"""
Teacher, student and parameter counts
=====================================

The teacher is a frozen conv front end plus a stack of transformer blocks.
The student keeps the front end but has a single block F and an output head O.
It generates layer after layer as ``h_next = O(F(h) + h)``, starting from the
feature embedding ``f``.
"""

import numpy as np

from gendistill.models import (
    DESK,
    FULL_SIZE,
    VARIANTS,
    StudentConfig,
    TeacherConfig,
    breakdown,
    build_student,
    build_teacher,
    count_params,
    format_millions,
    generate_sequence,
    teacher_forward,
)

# %%
# Full-size counts come from shapes alone, so nothing is allocated here.
full = StudentConfig(VARIANTS["proposed"], FULL_SIZE.frontend, FULL_SIZE.block)
print("full-size student:", count_params(full), format_millions(count_params(full)))
for part, n in breakdown(full).items():
    print(f"  {part:24s} {n:>10,}")
print("full-size teacher:", format_millions(count_params(TeacherConfig(FULL_SIZE.frontend, FULL_SIZE.block, 12))))

# %%
# The desk preset is the same architecture at width 32 with two conv layers.
teacher = build_teacher(TeacherConfig(DESK.frontend, DESK.block, 12, seed=0))
student = build_student("proposed", DESK.frontend, DESK.block, seed=0, teacher=teacher)
wave = np.random.default_rng(1).standard_normal(512)
stack = teacher_forward(wave, teacher)
print(f"\n512 samples -> {stack.f.shape[0]} frames of width {stack.f.shape[1]}, {stack.n_layers} teacher layers")

# %%
# Generation never looks at the teacher. Asking for more layers leaves the
# earlier ones untouched.
f = student.features(wave)
three = generate_sequence(f, 3, student)
five = generate_sequence(f, 5, student)
print("first three layers identical for n=3 and n=5:",
      all(np.array_equal(a.data, b.data) for a, b in zip(three, five)))

# %%
# The architecture comparison covers seven variants. Their desk-scale sizes:
for name, v in VARIANTS.items():
    print(f"  {name:14s} {count_params(StudentConfig(v, DESK.frontend, DESK.block)):>7,}")
