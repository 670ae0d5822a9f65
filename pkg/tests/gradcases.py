"""Seeded finite-difference cases for every primitive and a few composites."""

from __future__ import annotations

import numpy as np

from gpal.diffcore import Tensor
from gpal.diffcore import ops


def _away_from_zero(rng, shape, margin=0.05):
    x = rng.normal(size=shape)
    return np.where(np.abs(x) < margin, np.sign(x + 1e-12) * margin, x)


def _weighted(out: Tensor, w: np.ndarray) -> Tensor:
    # a random linear functional exercises the whole Jacobian, not just its row sums
    return ops.sum_(ops.mul(out, Tensor(w)))


def primitive_cases(seed: int):
    """One ``(name, fn, points)`` per primitive, drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    r, c = int(rng.integers(2, 5)), int(rng.integers(2, 5))
    w = rng.normal(size=(r, c))
    a = rng.normal(size=(r, c))
    b = rng.normal(size=(r, c))
    cases = [
        ("add", lambda x, y: _weighted(ops.add(x, y), w), [a, b]),
        ("add_broadcast", lambda x, y: _weighted(ops.add(x, y), w), [a, b[0]]),
        ("sub", lambda x, y: _weighted(ops.sub(x, y), w), [a, b]),
        ("mul", lambda x, y: _weighted(ops.mul(x, y), w), [a, b]),
        ("div", lambda x, y: _weighted(ops.div(x, y), w), [a, np.abs(b) + 0.5]),
        ("scale", lambda x: _weighted(ops.scale(x, 2.5), w), [a]),
        ("sqrt", lambda x: _weighted(ops.sqrt(x), w), [np.abs(a) + 0.2]),
        ("transpose", lambda x: _weighted(ops.transpose(x), w.T), [a]),
        ("reshape", lambda x: _weighted(ops.reshape(x, (c, r)), w.reshape(c, r)), [a]),
        ("concat", lambda x, y: _weighted(ops.concat([x, y], axis=0), np.vstack([w, w[::-1]])), [a, b]),
        ("slice", lambda x: _weighted(x[1:], w[1:]), [a]),
        ("softmax", lambda x: _weighted(ops.softmax(x), w), [a]),
        ("log_softmax", lambda x: _weighted(ops.log_softmax(x), w), [a]),
        ("relu", lambda x: _weighted(ops.relu(x), w), [_away_from_zero(rng, (r, c))]),
        ("gelu", lambda x: _weighted(ops.gelu(x), w), [a]),
        ("sum", lambda x: ops.sum_(ops.mul(ops.sum_(x, axis=1), Tensor(w[:, 0]))), [a]),
        ("mean", lambda x: ops.sum_(ops.mul(ops.mean(x, axis=0), Tensor(w[0]))), [a]),
    ]
    k = int(rng.integers(2, 4))
    m = rng.normal(size=(c, k))
    wk = rng.normal(size=(r, k))
    cases.append(("matmul", lambda x, y: _weighted(ops.matmul(x, y), wk), [a, m]))
    a3 = rng.normal(size=(2, r, c))
    cases.append(("matmul_batched", lambda x, y: _weighted(ops.matmul(x, y), np.stack([wk, wk])), [a3, m]))
    # width 2 normalizes to +-1 whatever the input: a flat function, so use >= 3
    wide = c + 2
    gain = 1 + 0.1 * rng.normal(size=wide)
    bias = 0.1 * rng.normal(size=wide)
    w_ln = rng.normal(size=(r, wide))
    cases.append(("layer_norm", lambda x, g, bb: _weighted(ops.layer_norm(x, g, bb), w_ln),
                  [rng.normal(size=(r, wide)), gain, bias]))
    ids = rng.integers(0, r, size=5)
    w_ids = rng.normal(size=(5, c))
    cases.append(("embedding_gather", lambda t: _weighted(ops.embedding_gather(t, ids), w_ids), [a]))
    mask = rng.random(size=(r, c)) < 0.3
    cases.append(("mask_fill", lambda x: _weighted(ops.mask_fill(x, mask, -3.0), w), [a]))
    targets = rng.integers(0, c, size=r)
    cases.append(("cross_entropy", lambda x: ops.cross_entropy_from_logits(x, targets), [a]))
    targets_pad = targets.copy()
    targets_pad[0] = 0
    cases.append(("cross_entropy_ignore",
                  lambda x: ops.cross_entropy_from_logits(x, targets_pad, ignore_index=0), [a]))
    return cases


def composite_case(seed: int):
    """A random three-layer graph mixing most primitives."""
    rng = np.random.default_rng([seed, 99])
    n, d, h = 3, 4, 5
    x = rng.normal(size=(n, d))
    w1 = rng.normal(size=(d, h)) * 0.7
    w2 = rng.normal(size=(h, d)) * 0.7
    gain, bias = 1 + 0.1 * rng.normal(size=d), 0.1 * rng.normal(size=d)
    t = rng.integers(0, d, size=n)

    def fn(x, w1, w2, gain, bias):
        hidden = ops.gelu(ops.matmul(x, w1))
        back = ops.add(x, ops.matmul(hidden, w2))
        normed = ops.layer_norm(back, gain, bias)
        att = ops.softmax(ops.matmul(normed, ops.transpose(normed)))
        mixed = ops.matmul(att, normed)
        return ops.add(ops.cross_entropy_from_logits(mixed, t), ops.scale(ops.mean(ops.mul(mixed, mixed)), 0.1))

    return "composite", fn, [x, w1, w2, gain, bias]
