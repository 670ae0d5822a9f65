"""Transformer building blocks over named parameter dictionaries."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..diffcore import ops
from ..diffcore.tensor import Tensor

NEG_INF = -1e9


@dataclass(frozen=True)
class TransformerConfig:
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 256
    dropout: float = 0.1
    max_len: int = 32

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ValueError("d_model must be divisible by n_heads")

    def to_dict(self) -> dict:
        return asdict(self)


def sinusoidal_positions(max_len: int, d: int) -> np.ndarray:
    pos = np.arange(max_len)[:, None]
    i = np.arange(0, d, 2)[None, :]
    angle = pos / np.power(10000.0, i / d)
    pe = np.zeros((max_len, d))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle)
    return pe


class ParamInit:
    """Seeded initializers writing into an ordered name -> Tensor dict."""

    def __init__(self, rng: np.random.Generator, params: dict[str, Tensor]):
        self.rng = rng
        self.params = params

    def normal(self, name: str, shape, std: float) -> None:
        self.params[name] = Tensor(self.rng.normal(0.0, std, size=shape), requires_grad=True, name=name)

    def const(self, name: str, shape, value: float) -> None:
        self.params[name] = Tensor(np.full(shape, value, dtype=np.float64), requires_grad=True, name=name)

    def linear(self, name: str, d_in: int, d_out: int) -> None:
        self.normal(f"{name}.w", (d_in, d_out), 1.0 / np.sqrt(d_in))
        self.const(f"{name}.b", (d_out,), 0.0)

    def layer_norm(self, name: str, d: int) -> None:
        self.const(f"{name}.g", (d,), 1.0)
        self.const(f"{name}.b", (d,), 0.0)


def init_self_attention(init: ParamInit, name: str, d: int) -> None:
    init.linear(f"{name}.qkv", d, 3 * d)
    init.linear(f"{name}.o", d, d)


def init_cross_attention(init: ParamInit, name: str, d: int) -> None:
    init.linear(f"{name}.q", d, d)
    init.linear(f"{name}.kv", d, 2 * d)
    init.linear(f"{name}.o", d, d)


def init_ffn(init: ParamInit, name: str, d: int, d_ff: int) -> None:
    init.linear(f"{name}.1", d, d_ff)
    init.linear(f"{name}.2", d_ff, d)


def linear(p: dict[str, Tensor], name: str, x: Tensor) -> Tensor:
    return ops.add(ops.matmul(x, p[f"{name}.w"]), p[f"{name}.b"])


def layer_norm(p: dict[str, Tensor], name: str, x: Tensor) -> Tensor:
    return ops.layer_norm(x, p[f"{name}.g"], p[f"{name}.b"])


class Dropout:
    """Inverted dropout driven by an explicit generator; identity when ``rng`` is None."""

    def __init__(self, rate: float, rng: np.random.Generator | None):
        self.rate = rate
        self.rng = rng

    def __call__(self, x: Tensor) -> Tensor:
        if self.rng is None or self.rate <= 0.0:
            return x
        keep = (self.rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return ops.mul(x, Tensor(keep))


def _split_heads(x: Tensor, n_heads: int) -> Tensor:
    b, t, d = x.shape
    return ops.transpose(ops.reshape(x, (b, t, n_heads, d // n_heads)), (0, 2, 1, 3))


def _merge_heads(x: Tensor) -> Tensor:
    b, h, t, dh = x.shape
    return ops.reshape(ops.transpose(x, (0, 2, 1, 3)), (b, t, h * dh))


def attend(q: Tensor, k: Tensor, v: Tensor, mask: np.ndarray | None, n_heads: int,
           drop: Dropout) -> Tensor:
    """Scaled dot-product attention; ``mask`` is True where attention is forbidden."""
    qh, kh, vh = _split_heads(q, n_heads), _split_heads(k, n_heads), _split_heads(v, n_heads)
    scores = ops.scale(ops.matmul(qh, ops.transpose(kh, (0, 1, 3, 2))), 1.0 / np.sqrt(qh.shape[-1]))
    if mask is not None:
        scores = ops.mask_fill(scores, mask, NEG_INF)
    weights = drop(ops.softmax(scores))
    return _merge_heads(ops.matmul(weights, vh))


def self_attention(p, name: str, x: Tensor, mask, n_heads: int, drop: Dropout) -> Tensor:
    d = x.shape[-1]
    qkv = linear(p, f"{name}.qkv", x)
    q, k, v = qkv[..., :d], qkv[..., d:2 * d], qkv[..., 2 * d:]
    return linear(p, f"{name}.o", attend(q, k, v, mask, n_heads, drop))


def cross_attention(p, name: str, x: Tensor, memory: Tensor, mask, n_heads: int,
                    drop: Dropout) -> Tensor:
    d = x.shape[-1]
    q = linear(p, f"{name}.q", x)
    kv = linear(p, f"{name}.kv", memory)
    k, v = kv[..., :d], kv[..., d:]
    return linear(p, f"{name}.o", attend(q, k, v, mask, n_heads, drop))


def ffn(p, name: str, x: Tensor, activation) -> Tensor:
    return linear(p, f"{name}.2", activation(linear(p, f"{name}.1", x)))


def causal_mask(t: int) -> np.ndarray:
    return np.triu(np.ones((t, t), dtype=bool), k=1)
