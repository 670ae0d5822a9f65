from __future__ import annotations

import numpy as np

from ..diffcore import ops
from ..diffcore.tensor import Tensor
from ..textcore.vocab import PAD, Vocabulary
from .layers import (
    Dropout,
    ParamInit,
    TransformerConfig,
    causal_mask,
    ffn,
    init_ffn,
    init_self_attention,
    layer_norm,
    linear,
    self_attention,
    sinusoidal_positions,
)
from .nmt import SequenceLengthError


class EmbeddingBridge:
    """Linear map ``FC`` taking NMT source embeddings (dim m) to LM inputs (dim n).

    No bias, so ``bridge(c * e) == c * bridge(e)``.  ``bos_source`` is the NMT
    embedding of ``<bos>`` captured when the bridge was trained; its image is
    the LM's start-of-sequence input.
    """

    kind = "bridge"

    def __init__(self, fc: Tensor, bos_source: np.ndarray):
        self.fc = fc
        self.bos_source = np.asarray(bos_source, dtype=np.float64)

    @classmethod
    def initialize(cls, m: int, n: int, bos_source: np.ndarray, rng: np.random.Generator):
        fc = Tensor(rng.normal(0.0, 1.0 / np.sqrt(m), size=(m, n)), requires_grad=True, name="fc")
        return cls(fc, bos_source)

    @property
    def dims(self) -> tuple[int, int]:
        return self.fc.shape

    def __call__(self, e) -> Tensor:
        return ops.matmul(e, self.fc)

    def apply(self, e: np.ndarray) -> np.ndarray:
        return np.asarray(e) @ self.fc.data

    def bos_input(self) -> Tensor:
        return ops.matmul(Tensor(self.bos_source[None]), self.fc)


class CausalLm:
    """Decoder-only pre-LN transformer over bridged source embeddings."""

    kind = "lm"

    def __init__(self, config: TransformerConfig, vocab: Vocabulary, seed: int = 0,
                 params: dict[str, Tensor] | None = None):
        self.config = config
        self.vocab = vocab
        self.positions = sinusoidal_positions(config.max_len + 1, config.d_model)
        if params is None:
            params = {}
            init = ParamInit(np.random.default_rng(seed), params)
            d = config.d_model
            for i in range(config.n_layers):
                init.layer_norm(f"blk.{i}.ln1", d)
                init_self_attention(init, f"blk.{i}.attn", d)
                init.layer_norm(f"blk.{i}.ln2", d)
                init_ffn(init, f"blk.{i}.ffn", d, config.d_ff)
            init.layer_norm("ln", d)
            init.normal("out.w", (d, len(vocab)), 0.02)
            init.const("out.b", (len(vocab),), 0.0)
        self.params = params

    def requires_grad_(self, flag: bool) -> "CausalLm":
        for p in self.params.values():
            p.requires_grad = flag
        return self

    def logits(self, v: Tensor, pad: np.ndarray | None = None, rng=None) -> Tensor:
        """Next-token logits for inputs ``(B, T, n)``; position i sees inputs <= i only."""
        b, t, _ = v.shape
        if t > self.config.max_len + 1:
            raise SequenceLengthError(f"LM input of length {t} exceeds max_len")
        c, p = self.config, self.params
        drop = Dropout(c.dropout, rng)
        x = drop(ops.add(v, Tensor(self.positions[:t])))
        mask = causal_mask(t)[None, None]
        if pad is not None and pad.any():
            mask = mask | pad[:, None, None, :]
        for i in range(c.n_layers):
            x = ops.add(x, drop(self_attention(p, f"blk.{i}.attn", layer_norm(p, f"blk.{i}.ln1", x),
                                               mask, c.n_heads, drop)))
            x = ops.add(x, drop(ffn(p, f"blk.{i}.ffn", layer_norm(p, f"blk.{i}.ln2", x), ops.gelu)))
        return linear(p, "out", layer_norm(p, "ln", x))


def lm_inputs(bridge: EmbeddingBridge, v_inputs: Tensor) -> Tensor:
    """``[v_bos, v_1 .. v_{k-1}]`` for a single sequence ``(k, n)`` -> ``(1, k, n)``."""
    k = v_inputs.shape[0]
    seq = ops.concat([bridge.bos_input(), v_inputs[: k - 1]], axis=0) if k > 1 else bridge.bos_input()
    return ops.reshape(seq, (1, k, seq.shape[-1]))


def lm_nll(lm: CausalLm, bridge: EmbeddingBridge, v_inputs: Tensor, targets) -> Tensor:
    """Mean negative log-probability of ``targets`` given bos and the preceding inputs."""
    targets = np.asarray(targets, dtype=np.int64)
    if v_inputs.ndim != 2 or v_inputs.shape[0] != targets.shape[0]:
        raise ValueError(f"lm_nll: {v_inputs.shape[0] if v_inputs.ndim else 0} inputs vs "
                         f"{targets.shape[0]} targets")
    logits = lm.logits(lm_inputs(bridge, v_inputs))
    return ops.cross_entropy_from_logits(logits[0], targets)


def lm_batch_loss(lm: CausalLm, bridge: EmbeddingBridge, src_table: np.ndarray, ids: np.ndarray,
                  rng=None) -> Tensor:
    """Training loss over padded id batches ``(B, k)`` with frozen NMT embeddings."""
    b, k = ids.shape
    e = Tensor(src_table[ids])
    v = bridge(e)
    bos = ops.reshape(bridge.bos_input(), (1, 1, -1))
    bos = ops.add(bos, Tensor(np.zeros((b, 1, v.shape[-1]))))
    seq = ops.concat([bos, v[:, : k - 1]], axis=1) if k > 1 else bos
    inputs_pad = np.concatenate([np.zeros((b, 1), dtype=bool), ids[:, : k - 1] == PAD], axis=1)
    logits = lm.logits(seq, inputs_pad, rng)
    return ops.cross_entropy_from_logits(logits, ids, ignore_index=PAD)

