"""Float64 reverse-mode differentiation and Adam."""

from .gradcheck import GradCheckReport, grad_check
from .ops import (
    PRIMITIVES,
    add,
    concat,
    cross_entropy_from_logits,
    div,
    embedding_gather,
    eval_op,
    gelu,
    layer_norm,
    log_softmax,
    mask_fill,
    matmul,
    mean,
    mul,
    relu,
    reshape,
    scale,
    slice_,
    softmax,
    sqrt,
    sub,
    sum_,
    transpose,
)
from .optim import Adam, AdamState, adam_step
from .tensor import DiffError, Node, Tape, TapeError, Tensor, as_tensor, backward, is_grad_enabled, no_grad

__all__ = [
    "PRIMITIVES", "Adam", "AdamState", "DiffError", "GradCheckReport", "Node", "Tape", "TapeError",
    "Tensor", "adam_step", "add", "as_tensor", "backward", "concat", "cross_entropy_from_logits",
    "div", "embedding_gather", "eval_op", "gelu", "grad_check", "is_grad_enabled", "layer_norm",
    "log_softmax", "mask_fill", "matmul", "mean", "mul", "no_grad", "relu", "reshape", "scale",
    "slice_", "softmax", "sqrt", "sub", "sum_", "transpose",
]
