"""
Reverse-mode gradients on numpy arrays
======================================

Every differentiable operation in gendistill records itself on a tape while
one is open. Asking the tape for a gradient walks the records backwards.
"""

import numpy as np

from gendistill.tensor import Tape, Tensor, finite_diff_check, ops

# A product of two scalars: d(xy)/dx = y and d(xy)/dy = x.
x = Tensor(2.0, requires_grad=True)
y = Tensor(5.0, requires_grad=True)
with Tape() as tape:
    loss = x * y
gx, gy = tape.gradient(loss, [x, y])
print(f"d(xy)/dx = {gx}, d(xy)/dy = {gy}")

# The same machinery carries a small network. Here a GELU layer feeds a
# softmax cross-entropy.
rng = np.random.default_rng(0)
inputs = Tensor(rng.standard_normal((6, 4)))
weight = Tensor(rng.standard_normal((4, 3)), requires_grad=True)
labels = np.array([0, 2, 1, 1, 0, 2])


def nll_of(w):
    logp = ops.log_softmax(ops.gelu(ops.matmul(inputs, w)), axis=-1)
    return -ops.mean(logp[np.arange(6), labels])


with Tape() as tape:
    nll = nll_of(weight)
print("cross-entropy:", nll.item())
print("gradient wrt weight:\n", tape.gradient(nll, [weight])[0])

# Central differences confirm the tape. The returned number is the worst
# coordinate-wise relative error.
print(f"finite-difference check: max relative error {finite_diff_check(nll_of, [weight]):.2e}")

# The full suite covers every primitive plus the student loss. The CLI
# equivalent is ``gendistill gradcheck``.
from gendistill.gradsuite import run_gradcheck  # noqa: E402

for name, e in run_gradcheck(n_seeds=2).items():
    print(f"  {name:40s} {e:.2e}")
