from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, backward


@dataclass
class GradCheckReport:
    max_rel_error: float
    max_abs_error: float
    worst_input: int
    worst_index: tuple[int, ...]
    analytic: float
    numeric: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol


def grad_check(fn: Callable[..., Tensor], points: Sequence[np.ndarray] | np.ndarray,
               h: float = 1e-6, tol: float = 1e-5, floor: float = 1e-3) -> GradCheckReport:
    """Compare reverse-mode gradients of a scalar ``fn`` with central differences.

    ``fn`` receives one Tensor per point.  The per-coordinate relative error is
    ``|a - n| / max(|a|, |n|, floor * scale)`` where ``scale`` is the largest
    gradient magnitude of that input, so coordinates whose gradient is
    negligible next to the rest are judged at the input's gradient scale.
    Never raises on disagreement; inspect ``passed``.
    """
    if isinstance(points, np.ndarray):
        points = [points]
    points = [np.array(p, dtype=np.float64) for p in points]
    leaves = [Tensor(p.copy(), requires_grad=True) for p in points]
    grads = backward(fn(*leaves), inputs=leaves)
    analytic = [grads[t] for t in leaves]

    def value(args) -> float:
        return float(fn(*[Tensor(a) for a in args]).data)

    worst = GradCheckReport(0.0, 0.0, -1, (), 0.0, 0.0, tol)
    for i, p in enumerate(points):
        numeric = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            plus = [q.copy() for q in points]
            minus = [q.copy() for q in points]
            plus[i][idx] += h
            minus[i][idx] -= h
            numeric[idx] = (value(plus) - value(minus)) / (2 * h)
        a = analytic[i]
        scale = max(np.abs(a).max(initial=0.0), np.abs(numeric).max(initial=0.0))
        denom = np.maximum(np.maximum(np.abs(a), np.abs(numeric)), max(floor * scale, 1e-300))
        diff = np.abs(a - numeric)
        rel = diff / denom
        if rel.size and rel.max() >= worst.max_rel_error:
            j = np.unravel_index(int(rel.argmax()), rel.shape)
            worst = GradCheckReport(float(rel[j]), float(diff.max()), i, tuple(int(x) for x in j),
                                    float(a[j]), float(numeric[j]), tol)
    return worst
