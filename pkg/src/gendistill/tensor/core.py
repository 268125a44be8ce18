"""Tensor container and the gradient tape.

A :class:`Tensor` wraps an immutable numpy array. Operations executed while a
:class:`Tape` is active, and touching at least one tensor with
``requires_grad=True``, are appended to that tape together with their
vector-Jacobian product. :meth:`Tape.gradient` replays the tape in reverse.
"""

from __future__ import annotations

import contextlib
from collections.abc import Callable, Iterator, Mapping, Sequence
from typing import Any

import numpy as np

from ..errors import ContractError

DEFAULT_DTYPE = np.float64
_ALLOWED_DTYPES = (np.dtype(np.float64), np.dtype(np.float32))

# innermost last; ``None`` marks a no_grad region
_TAPE_STACK: list[Tape | None] = []


def _active_tape() -> Tape | None:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class Tensor:
    """Dense row-major array with optional gradient tracking."""

    __slots__ = ("data", "requires_grad", "name", "__weakref__")
    __array_priority__ = 100

    def __init__(self, data: Any, requires_grad: bool = False, name: str | None = None, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _ALLOWED_DTYPES:
            arr = arr.astype(DEFAULT_DTYPE)
        self.data: np.ndarray = arr
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(()))

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{tag})"

    def __len__(self) -> int:
        return self.shape[0]

    # operator sugar, defined in ops to avoid a circular import
    def __add__(self, other):
        return _ops().add(self, other)

    def __radd__(self, other):
        return _ops().add(other, self)

    def __sub__(self, other):
        return _ops().sub(self, other)

    def __rsub__(self, other):
        return _ops().sub(other, self)

    def __mul__(self, other):
        return _ops().mul(self, other)

    def __rmul__(self, other):
        return _ops().mul(other, self)

    def __truediv__(self, other):
        return _ops().div(self, other)

    def __rtruediv__(self, other):
        return _ops().div(other, self)

    def __neg__(self):
        return _ops().neg(self)

    def __matmul__(self, other):
        return _ops().matmul(self, other)

    def __getitem__(self, index):
        return _ops().getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False) -> Tensor:
        return _ops().sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> Tensor:
        return _ops().mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return _ops().reshape(self, shape)

    def transpose(self, *axes) -> Tensor:
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return _ops().transpose(self, axes or None)


def _ops():
    from . import ops

    return ops


def as_tensor(x: Any, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype or DEFAULT_DTYPE))


VJP = Callable[[np.ndarray], Sequence[np.ndarray | None]]


class _Node:
    __slots__ = ("output", "inputs", "vjp")

    def __init__(self, output: Tensor, inputs: tuple[Tensor, ...], vjp: VJP):
        self.output = output
        self.inputs = inputs
        self.vjp = vjp


class Tape:
    """Records primitive applications in execution order.

    Use as a context manager; nested tapes each record independently only if
    they are the innermost active tape.
    """

    def __init__(self) -> None:
        self.nodes: list[_Node] = []

    def __enter__(self) -> Tape:
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, *exc) -> None:
        popped = _TAPE_STACK.pop()
        assert popped is self

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, output: Tensor, inputs: tuple[Tensor, ...], vjp: VJP) -> None:
        self.nodes.append(_Node(output, inputs, vjp))

    def gradient(self, root: Tensor, wrt):
        """Reverse-mode gradients of scalar ``root``.

        ``wrt`` is a tensor, a sequence of tensors or a mapping of name to
        tensor; the result mirrors that structure with numpy arrays. Leaves
        that do not influence ``root`` get zeros.
        """
        if root.size != 1:
            raise ContractError(f"backward needs a scalar root, got shape {root.shape}")
        grads: dict[int, np.ndarray] = {id(root): np.ones_like(root.data)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node.output), None)
            if g is None:
                continue
            for inp, gi in zip(node.inputs, node.vjp(g)):
                if gi is None or not inp.requires_grad:
                    continue
                key = id(inp)
                if key in grads:
                    grads[key] = grads[key] + gi
                else:
                    grads[key] = gi

        def lookup(t: Tensor) -> np.ndarray:
            g = grads.get(id(t))
            if g is None:
                return np.zeros_like(t.data)
            return np.asarray(g, dtype=t.dtype).reshape(t.shape)

        if isinstance(wrt, Tensor):
            return lookup(wrt)
        if isinstance(wrt, Mapping):
            return {k: lookup(v) for k, v in wrt.items()}
        return [lookup(t) for t in wrt]


def backward(root: Tensor, tape: Tape, params=None):
    """Gradients of ``root`` for ``params`` (default: every leaf on the tape)."""
    if params is None:
        produced = {id(n.output) for n in tape.nodes}
        seen: dict[int, Tensor] = {}
        for n in tape.nodes:
            for inp in n.inputs:
                if inp.requires_grad and id(inp) not in produced:
                    seen.setdefault(id(inp), inp)
        params = list(seen.values())
    return tape.gradient(root, params)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Suspend recording on every enclosing tape."""
    _TAPE_STACK.append(None)
    try:
        yield
    finally:
        _TAPE_STACK.pop()


def make_result(data: np.ndarray, inputs: tuple[Tensor, ...], vjp: VJP) -> Tensor:
    """Wrap ``data`` and record the producing primitive when needed."""
    tape = _active_tape()
    tracked = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=tracked)
    if tracked:
        tape.record(out, inputs, vjp)
    return out
