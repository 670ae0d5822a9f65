"""Eager float64 tensors with define-by-run gradient recording.

Every primitive evaluated on a tensor that requires gradients appends a
:class:`Node` to the graph.  Nodes carry a global sequence number, so sorting
the nodes reachable from a loss by that number yields a valid topological
order; :class:`Tape` is that ordered list and is consumed by one backward pass.
"""

from __future__ import annotations

import contextlib
import itertools
from collections.abc import Callable, Iterable, Sequence

import numpy as np

_sequence = itertools.count()
_grad_enabled = True


class DiffError(ValueError):
    """Invalid input to a primitive (shape mismatch, bad index, non-finite)."""

    def __init__(self, op: str, message: str, shapes: Sequence[tuple] = ()):
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        detail = f" shapes={list(self.shapes)}" if self.shapes else ""
        super().__init__(f"{op}: {message}{detail}")


class TapeError(RuntimeError):
    """Backward called on a graph that cannot be differentiated."""


@contextlib.contextmanager
def no_grad():
    """Disable recording inside the block (decoding, evaluation)."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def is_grad_enabled() -> bool:
    return _grad_enabled


class Node:
    """One recorded primitive application."""

    __slots__ = ("seq", "op", "inputs", "backward_fn", "consumed")

    def __init__(self, op: str, inputs: tuple["Tensor", ...], backward_fn: Callable):
        self.seq = next(_sequence)
        self.op = op
        self.inputs = inputs
        self.backward_fn = backward_fn
        self.consumed = False


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "node", "name")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(())
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.node: Node | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self.node is None

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        label = f"{self.name}: " if self.name else ""
        return f"Tensor({label}shape={self.shape}{flag})"

    # operator sugar; the primitives live in ops.py
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, other)
        return ops.mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        from . import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, 1.0 / other)
        return ops.div(self, other)

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from . import ops
        return ops.slice_(self, index)

    @property
    def T(self):
        from . import ops
        return ops.transpose(self)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def record(op: str, out_data: np.ndarray, inputs: tuple[Tensor, ...], backward_fn: Callable) -> Tensor:
    """Wrap a primitive result; attach a node when any input needs gradients.

    ``backward_fn(grad_out)`` must return one gradient (or None) per input.
    """
    out = Tensor.__new__(Tensor)
    out.data = out_data
    out.grad = None
    out.name = None
    if _grad_enabled and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.node = Node(op, inputs, backward_fn)
    else:
        out.requires_grad = False
        out.node = None
    return out


class Tape:
    """Reverse-topological list of the nodes a scalar loss depends on."""

    def __init__(self, loss: Tensor):
        if loss.size != 1:
            raise TapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        self.loss = loss
        self.entries = self._collect(loss)

    @staticmethod
    def _collect(loss: Tensor) -> list[Tensor]:
        found: dict[int, Tensor] = {}
        stack = [loss]
        while stack:
            t = stack.pop()
            if t.node is None or id(t) in found:
                continue
            found[id(t)] = t
            stack.extend(t.node.inputs)
        return sorted(found.values(), key=lambda t: t.node.seq, reverse=True)

    def backward(self) -> dict[Tensor, np.ndarray]:
        if any(t.node.consumed for t in self.entries):
            raise TapeError("graph already consumed by a previous backward; re-run the forward pass")
        root = self.loss
        seed = np.ones_like(root.data)
        grads: dict[int, np.ndarray] = {id(root): seed}
        leaves: dict[int, Tensor] = {}
        if root.node is None:
            if root.requires_grad:
                leaves[id(root)] = root
        for t in self.entries:
            node = t.node
            node.consumed = True
            g = grads.pop(id(t), None)
            if g is None:
                continue
            in_grads = node.backward_fn(g)
            for inp, ig in zip(node.inputs, in_grads):
                if ig is None or not inp.requires_grad:
                    continue
                key = id(inp)
                if key in grads:
                    grads[key] = grads[key] + ig
                else:
                    grads[key] = ig
                if inp.node is None:
                    leaves[key] = inp
            node.backward_fn = _consumed_backward
        result: dict[Tensor, np.ndarray] = {}
        for key, leaf in leaves.items():
            g = grads[key]
            leaf.grad = g.copy() if leaf.grad is None else leaf.grad + g
            result[leaf] = g
        return result


def _consumed_backward(_g):
    raise TapeError("graph already consumed")


def backward(loss: Tensor, inputs: Iterable[Tensor] | None = None) -> dict[Tensor, np.ndarray]:
    """Reverse-mode pass from a scalar ``loss``.

    Leaves that require gradients get ``.grad`` accumulated.  The returned map
    holds this pass's gradient for every reached leaf, plus zeros for any
    tensor in ``inputs`` the loss does not depend on.
    """
    grads = Tape(loss).backward()
    if inputs is not None:
        for t in inputs:
            if t not in grads:
                grads[t] = np.zeros_like(t.data)
    return grads
