from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import DiffError, Tensor

BETA1 = 0.9
BETA2 = 0.999
EPS_ADAM = 1e-8


@dataclass
class AdamState:
    """Zero-initialized moments keyed by parameter position, plus the step count."""

    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_params(cls, params) -> "AdamState":
        return cls([np.zeros_like(p.data) for p in params],
                   [np.zeros_like(p.data) for p in params], 0)


def adam_step(params: list[Tensor], grads: list[np.ndarray], state: AdamState, lr: float,
              beta1: float = BETA1, beta2: float = BETA2, eps: float = EPS_ADAM):
    """Bias-corrected Adam update applied in place to ``params``.

    Returns ``(params, state)`` for convenience.
    """
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise DiffError("adam_step", "params, grads and state disagree in count")
    for i, (p, g) in enumerate(zip(params, grads)):
        if g.shape != p.shape or state.m[i].shape != p.shape:
            raise DiffError("adam_step", f"shape mismatch for parameter {p.name or i}",
                            (p.shape, g.shape))
        if not np.all(np.isfinite(g)):
            raise DiffError("adam_step", f"non-finite gradient for parameter {p.name or i}")
    state.t += 1
    t = state.t
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p.data = p.data - lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params, state


class Adam:
    """Thin stateful wrapper used by the training loops."""

    def __init__(self, params: list[Tensor], lr: float = 1e-3):
        self.params = list(params)
        self.lr = lr
        self.state = AdamState.for_params(self.params)

    def step(self, grads: dict[Tensor, np.ndarray]) -> None:
        gs = [grads.get(p, None) for p in self.params]
        gs = [np.zeros_like(p.data) if g is None else g for p, g in zip(self.params, gs)]
        adam_step(self.params, gs, self.state, self.lr)
