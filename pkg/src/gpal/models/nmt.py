from __future__ import annotations

import numpy as np

from ..diffcore import ops
from ..diffcore.tensor import Tensor
from ..textcore.vocab import BOS, EOS, PAD, Vocabulary
from .layers import (
    Dropout,
    ParamInit,
    TransformerConfig,
    causal_mask,
    cross_attention,
    ffn,
    init_cross_attention,
    init_ffn,
    init_self_attention,
    layer_norm,
    linear,
    self_attention,
    sinusoidal_positions,
)


class SequenceLengthError(ValueError):
    pass


class NmtModel:
    """Pre-LN transformer encoder-decoder.

    ``params["src_emb"]`` is the source embedding table whose rows the attack
    moves through.  Tables start at std ``d**-0.5`` and are multiplied by
    ``sqrt(d)`` on the way in, so rows have roughly unit norm while the
    stacks see unit-variance inputs.
    """

    kind = "nmt"

    def __init__(self, config: TransformerConfig, vocab_src: Vocabulary, vocab_tgt: Vocabulary,
                 seed: int = 0, params: dict[str, Tensor] | None = None):
        self.config = config
        self.vocab_src = vocab_src
        self.vocab_tgt = vocab_tgt
        self.positions = sinusoidal_positions(config.max_len + 1, config.d_model)
        self.embed_scale = float(np.sqrt(config.d_model))
        if params is None:
            params = {}
            self._init(np.random.default_rng(seed), params)
        self.params = params

    def _init(self, rng, params) -> None:
        c = self.config
        d = c.d_model
        init = ParamInit(rng, params)
        init.normal("src_emb", (len(self.vocab_src), d), d ** -0.5)
        init.normal("tgt_emb", (len(self.vocab_tgt), d), d ** -0.5)
        for i in range(c.n_layers):
            init.layer_norm(f"enc.{i}.ln1", d)
            init_self_attention(init, f"enc.{i}.attn", d)
            init.layer_norm(f"enc.{i}.ln2", d)
            init_ffn(init, f"enc.{i}.ffn", d, c.d_ff)
        init.layer_norm("enc.ln", d)
        for i in range(c.n_layers):
            init.layer_norm(f"dec.{i}.ln1", d)
            init_self_attention(init, f"dec.{i}.attn", d)
            init.layer_norm(f"dec.{i}.ln2", d)
            init_cross_attention(init, f"dec.{i}.cross", d)
            init.layer_norm(f"dec.{i}.ln3", d)
            init_ffn(init, f"dec.{i}.ffn", d, c.d_ff)
        init.layer_norm("dec.ln", d)
        init.normal("out.w", (d, len(self.vocab_tgt)), 0.02)
        init.const("out.b", (len(self.vocab_tgt),), 0.0)

    @property
    def src_embeddings(self) -> np.ndarray:
        return self.params["src_emb"].data

    def requires_grad_(self, flag: bool) -> "NmtModel":
        for p in self.params.values():
            p.requires_grad = flag
        return self

    def embed_source(self, ids) -> Tensor:
        return ops.embedding_gather(self.params["src_emb"], np.asarray(ids, dtype=np.int64))

    def _check_len(self, n: int) -> None:
        if n > self.config.max_len:
            raise SequenceLengthError(f"sequence of length {n} exceeds max_len={self.config.max_len}")

    def encode(self, src, src_pad: np.ndarray | None = None, rng=None) -> Tensor:
        """Encoder states for source ids ``(B, S)`` or embeddings ``(B, S, d)``."""
        if not isinstance(src, Tensor):
            src = self.embed_source(src)
        b, s, _ = src.shape
        self._check_len(s)
        c, p = self.config, self.params
        drop = Dropout(c.dropout, rng)
        x = drop(ops.add(ops.scale(src, self.embed_scale), Tensor(self.positions[:s])))
        mask = None if src_pad is None or not src_pad.any() else src_pad[:, None, None, :]
        for i in range(c.n_layers):
            x = ops.add(x, drop(self_attention(p, f"enc.{i}.attn", layer_norm(p, f"enc.{i}.ln1", x),
                                               mask, c.n_heads, drop)))
            x = ops.add(x, drop(ffn(p, f"enc.{i}.ffn", layer_norm(p, f"enc.{i}.ln2", x), ops.relu)))
        return layer_norm(p, "enc.ln", x)

    def decode_hidden(self, memory: Tensor, src_pad, tgt_in: np.ndarray, rng=None) -> Tensor:
        b, t = tgt_in.shape
        self._check_len(t)
        c, p = self.config, self.params
        drop = Dropout(c.dropout, rng)
        y = ops.scale(ops.embedding_gather(p["tgt_emb"], tgt_in), self.embed_scale)
        y = drop(ops.add(y, Tensor(self.positions[:t])))
        self_mask = causal_mask(t)[None, None]
        tgt_pad = tgt_in == PAD
        if tgt_pad.any():
            self_mask = self_mask | tgt_pad[:, None, None, :]
        cross_mask = None if src_pad is None or not src_pad.any() else src_pad[:, None, None, :]
        for i in range(c.n_layers):
            y = ops.add(y, drop(self_attention(p, f"dec.{i}.attn", layer_norm(p, f"dec.{i}.ln1", y),
                                               self_mask, c.n_heads, drop)))
            y = ops.add(y, drop(cross_attention(p, f"dec.{i}.cross", layer_norm(p, f"dec.{i}.ln2", y),
                                                memory, cross_mask, c.n_heads, drop)))
            y = ops.add(y, drop(ffn(p, f"dec.{i}.ffn", layer_norm(p, f"dec.{i}.ln3", y), ops.relu)))
        return layer_norm(p, "dec.ln", y)

    def project(self, hidden: Tensor) -> Tensor:
        return linear(self.params, "out", hidden)

    def logits(self, src, tgt_in: np.ndarray, src_pad=None, rng=None) -> Tensor:
        memory = self.encode(src, src_pad, rng)
        return self.project(self.decode_hidden(memory, src_pad, tgt_in, rng))


def teacher_forcing_inputs(y_ref) -> np.ndarray:
    """Decoder inputs ``[bos, y_1 .. y_{l-1}]`` for a batch ``(B, l)``."""
    y = np.asarray(y_ref, dtype=np.int64)
    return np.concatenate([np.full((y.shape[0], 1), BOS, dtype=np.int64), y[:, :-1]], axis=1)


def _as_batch(src):
    if isinstance(src, Tensor):
        return src if src.ndim == 3 else ops.reshape(src, (1,) + src.shape)
    arr = np.asarray(src, dtype=np.int64)
    return arr if arr.ndim == 2 else arr[None]


def nmt_loss(model: NmtModel, src, y_ref, src_pad=None, rng=None) -> Tensor:
    """Teacher-forced mean cross-entropy of ``y_ref`` (which ends with eos).

    ``src`` is a token-id sequence or an embedding tensor ``(k, m)``; batched
    ``(B, k)`` / ``(B, k, m)`` inputs pad with ``PAD`` in ``y_ref``.
    """
    src = _as_batch(src)
    y = np.asarray(y_ref, dtype=np.int64)
    if y.ndim == 1:
        y = y[None]
    if y.shape[1] > model.config.max_len or src.shape[1] > model.config.max_len:
        raise SequenceLengthError("input longer than max_len")
    logits = model.logits(src, teacher_forcing_inputs(y), src_pad, rng)
    return ops.cross_entropy_from_logits(logits, y, ignore_index=PAD)


def reference_has_eos(y_ref) -> bool:
    return len(y_ref) > 0 and int(y_ref[-1]) == EOS
