"""Primitive inventory.

Each primitive computes its output eagerly with numpy and, when an input
requires gradients, records a closure holding the values its backward rule
needs.  Broadcasting follows numpy; gradients are summed back to the input
shape.
"""

from __future__ import annotations

import math

import numpy as np

from .tensor import DiffError, Tensor, as_tensor, record

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DiffError(op, "operands do not broadcast", (a.shape, b.shape)) from None


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)
    sa, sb = a.shape, b.shape
    return record("add", a.data + b.data, (a, b),
                  lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a, b)
    sa, sb = a.shape, b.shape
    return record("sub", a.data - b.data, (a, b),
                  lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a, b)
    ad, bd = a.data, b.data

    def backward(g):
        return (_unbroadcast(g * bd, ad.shape) if a.requires_grad else None,
                _unbroadcast(g * ad, bd.shape) if b.requires_grad else None)

    return record("mul", ad * bd, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("div", a, b)
    ad, bd = a.data, b.data
    out = ad / bd

    def backward(g):
        return (_unbroadcast(g / bd, ad.shape) if a.requires_grad else None,
                _unbroadcast(-g * out / bd, bd.shape) if b.requires_grad else None)

    return record("div", out, (a, b), backward)


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return record("scale", a.data * c, (a,), lambda g: (g * c,))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data < 0):
        raise DiffError("sqrt", "negative input")
    out = np.sqrt(a.data)
    return record("sqrt", out, (a,), lambda g: (g * 0.5 / out,))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DiffError("matmul", "inner dimensions disagree", (a.shape, b.shape))
    ad, bd = a.data, b.data
    flat = bd.ndim == 2 and ad.ndim > 2
    if flat:
        # one GEMM instead of a loop over leading axes
        out = (ad.reshape(-1, ad.shape[-1]) @ bd).reshape(ad.shape[:-1] + (bd.shape[-1],))
    else:
        out = ad @ bd

    def backward(g):
        ga = gb = None
        if flat:
            g2 = g.reshape(-1, g.shape[-1])
            if a.requires_grad:
                ga = (g2 @ bd.T).reshape(ad.shape)
            if b.requires_grad:
                gb = ad.reshape(-1, ad.shape[-1]).T @ g2
            return ga, gb
        if a.requires_grad:
            ga = _unbroadcast(g @ np.swapaxes(bd, -1, -2), ad.shape)
        if b.requires_grad:
            gb = _unbroadcast(np.swapaxes(ad, -1, -2) @ g, bd.shape)
        return ga, gb

    return record("matmul", out, (a, b), backward)


def transpose(a, axes: tuple[int, ...] | None = None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        axes = tuple(range(a.ndim - 2)) + (a.ndim - 1, a.ndim - 2) if a.ndim >= 2 else (0,)
    if sorted(axes) != list(range(a.ndim)):
        raise DiffError("transpose", f"invalid axes {axes}", (a.shape,))
    inverse = tuple(np.argsort(axes))
    return record("transpose", a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def reshape(a, shape: tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise DiffError("reshape", f"cannot reshape to {shape}", (a.shape,)) from None
    src = a.shape
    return record("reshape", out, (a,), lambda g: (g.reshape(src),))


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    if not tensors:
        raise DiffError("concat", "no inputs")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise DiffError("concat", "shapes disagree off the concat axis",
                        [t.shape for t in tensors]) from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return record("concat", out, tensors, backward)


def slice_(a, index) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data[index]
    except IndexError as exc:
        raise DiffError("slice", str(exc), (a.shape,)) from None
    src_shape = a.shape
    advanced = isinstance(index, (list, np.ndarray)) or (
        isinstance(index, tuple) and any(isinstance(i, (list, np.ndarray)) for i in index))

    def backward(g):
        full = np.zeros(src_shape)
        if advanced:
            np.add.at(full, index, g)
        else:
            full[index] = g
        return (full,)

    return record("slice", np.array(out, dtype=np.float64), (a,), backward)


def embedding_gather(table, ids) -> Tensor:
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise DiffError("embedding_gather", "table must be 2-D", (table.shape,))
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise DiffError("embedding_gather",
                        f"index out of range [0, {table.shape[0]})", (table.shape, ids.shape))
    rows = table.shape

    def backward(g):
        full = np.zeros(rows)
        np.add.at(full, ids.reshape(-1), g.reshape(-1, rows[1]))
        return (full,)

    return record("embedding_gather", table.data[ids], (table,), backward)


def softmax(a) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return record("softmax", out, (a,), backward)


def log_softmax(a) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))

    def backward(g):
        return (g - np.exp(out) * g.sum(axis=-1, keepdims=True),)

    return record("log_softmax", out, (a,), backward)


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise DiffError("layer_norm", "gain/bias must match the last axis",
                        (x.shape, gain.shape, bias.shape))
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv
    gd = gain.data
    out = xhat * gd + bias.data

    def backward(g):
        gx = ggain = gbias = None
        if x.requires_grad:
            gh = g * gd
            gx = inv * (gh - gh.mean(axis=-1, keepdims=True)
                        - xhat * (gh * xhat).mean(axis=-1, keepdims=True))
        if gain.requires_grad:
            ggain = (g * xhat).reshape(-1, d).sum(axis=0)
        if bias.requires_grad:
            gbias = g.reshape(-1, d).sum(axis=0)
        return gx, ggain, gbias

    return record("layer_norm", out, (x, gain, bias), backward)


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    return record("relu", a.data * mask, (a,), lambda g: (g * mask,))


def gelu(a) -> Tensor:
    """Tanh approximation of GELU."""
    a = as_tensor(a)
    x = a.data
    inner = _SQRT_2_OVER_PI * (x + 0.044715 * x ** 3)
    t = np.tanh(inner)
    out = 0.5 * x * (1.0 + t)

    def backward(g):
        dinner = _SQRT_2_OVER_PI * (1.0 + 3 * 0.044715 * x * x)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner),)

    return record("gelu", out, (a,), backward)


def mask_fill(a, mask, value: float) -> Tensor:
    """Replace entries where ``mask`` is true by ``value``; mask broadcasts to ``a``."""
    a = as_tensor(a)
    mask = np.asarray(mask, dtype=bool)
    try:
        full = np.broadcast_to(mask, a.shape)
    except ValueError:
        raise DiffError("mask_fill", "mask does not broadcast", (a.shape, mask.shape)) from None
    keep = ~full
    return record("mask_fill", np.where(full, value, a.data), (a,), lambda g: (g * keep,))


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    src = a.shape
    out = np.asarray(a.data.sum(axis=axis, keepdims=keepdims), dtype=np.float64)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, src).copy(),)

    return record("sum", out, (a,), backward)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        count = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([a.shape[ax] for ax in axes]))
    return scale(sum_(a, axis=axis, keepdims=keepdims), 1.0 / count)


def cross_entropy_from_logits(logits, targets, ignore_index: int | None = None) -> Tensor:
    """Mean cross-entropy of integer ``targets`` under ``logits`` (last axis = classes).

    Positions whose target equals ``ignore_index`` are excluded from the mean.
    """
    logits = as_tensor(logits)
    targets = np.asarray(targets, dtype=np.int64)
    n_cls = logits.shape[-1]
    if logits.shape[:-1] != targets.shape:
        raise DiffError("cross_entropy_from_logits", "targets must match logits[..., 0]",
                        (logits.shape, targets.shape))
    flat = logits.data.reshape(-1, n_cls)
    tgt = targets.reshape(-1)
    keep = np.ones(tgt.shape, dtype=bool) if ignore_index is None else tgt != ignore_index
    if tgt[keep].size and (tgt[keep].min() < 0 or tgt[keep].max() >= n_cls):
        raise DiffError("cross_entropy_from_logits", f"target out of range [0, {n_cls})",
                        (logits.shape,))
    count = int(keep.sum())
    if count == 0:
        raise DiffError("cross_entropy_from_logits", "no targets to score")
    shifted = flat - flat.max(axis=-1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    safe = np.where(keep, tgt, 0)
    picked = logp[np.arange(tgt.size), safe]
    loss = -(picked * keep).sum() / count
    src = logits.shape

    def backward(g):
        grad = np.exp(logp)
        grad[np.arange(tgt.size), safe] -= 1.0
        grad *= (keep / count)[:, None]
        return ((grad * g).reshape(src),)

    return record("cross_entropy_from_logits", np.asarray(loss), (logits,), backward)


PRIMITIVES = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "div": div,
    "scale": scale,
    "sqrt": sqrt,
    "matmul": matmul,
    "transpose": transpose,
    "reshape": reshape,
    "concat": concat,
    "slice": slice_,
    "embedding_gather": embedding_gather,
    "softmax": softmax,
    "log_softmax": log_softmax,
    "layer_norm": layer_norm,
    "relu": relu,
    "gelu": gelu,
    "mask_fill": mask_fill,
    "sum": sum_,
    "mean": mean,
    "cross_entropy_from_logits": cross_entropy_from_logits,
}


def eval_op(op_kind: str, *inputs, **kwargs) -> Tensor:
    """Dispatch a primitive by name, e.g. ``eval_op("matmul", a, b)``."""
    try:
        fn = PRIMITIVES[op_kind]
    except KeyError:
        raise DiffError(op_kind, "unknown primitive") from None
    return fn(*inputs, **kwargs)
