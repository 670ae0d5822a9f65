from __future__ import annotations

import numpy as np

from ..diffcore.tensor import Tensor, no_grad
from ..textcore.vocab import BOS, EOS, PAD
from .nmt import NmtModel


def _log_probs(model: NmtModel, memory: np.ndarray, src_pad, prefixes: np.ndarray) -> np.ndarray:
    hidden = model.decode_hidden(Tensor(memory), src_pad, prefixes)
    last = hidden.data[:, -1]
    logits = last @ model.params["out.w"].data + model.params["out.b"].data
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def translate(model: NmtModel, src_ids, beam_size: int = 4, max_len: int | None = None,
              return_score: bool = False):
    """Length-normalized beam search; the result excludes bos and keeps the final eos.

    Hypotheses compete on mean token log-probability.  Among equal scores the
    lower token id (then the lower beam) wins, so decoding is deterministic.
    """
    if beam_size < 1:
        raise ValueError("beam_size must be >= 1")
    max_len = model.config.max_len if max_len is None else max_len
    src = np.asarray(src_ids, dtype=np.int64)[None]
    with no_grad():
        memory = model.encode(src).data
        alive: list[tuple[list[int], float]] = [([BOS], 0.0)]
        finished: list[tuple[list[int], float, float]] = []
        for step in range(1, max_len + 1):
            prefixes = np.array([seq for seq, _ in alive], dtype=np.int64)
            mem = np.broadcast_to(memory, (len(alive),) + memory.shape[1:])
            logp = _log_probs(model, mem, None, prefixes)
            totals = np.array([s for _, s in alive])[:, None] + logp
            n_vocab = logp.shape[1]
            beam_idx, tok_idx = np.divmod(np.arange(totals.size), n_vocab)
            order = np.lexsort((beam_idx, tok_idx, -totals.reshape(-1)))
            slots = beam_size - len(finished)
            new_alive = []
            for flat in order[:slots]:
                b, tok = int(beam_idx[flat]), int(tok_idx[flat])
                seq = alive[b][0] + [tok]
                total = float(totals.reshape(-1)[flat])
                if tok == EOS or step == max_len:
                    finished.append((seq[1:], total, total / step))
                else:
                    new_alive.append((seq, total))
            alive = new_alive
            if not alive or len(finished) >= beam_size:
                break
    best = min(finished, key=lambda h: (-h[2], h[0]))
    return (best[0], best[2]) if return_score else best[0]


def sequence_score(model: NmtModel, src_ids, hypothesis) -> float:
    """Mean log-probability the model assigns to ``hypothesis`` (ending in eos)."""
    src = np.asarray(src_ids, dtype=np.int64)[None]
    hyp = np.asarray(hypothesis, dtype=np.int64)
    with no_grad():
        memory = model.encode(src)
        tgt_in = np.concatenate([[BOS], hyp[:-1]])[None]
        hidden = model.decode_hidden(memory, None, tgt_in).data[0]
        logits = hidden @ model.params["out.w"].data + model.params["out.b"].data
        shifted = logits - logits.max(axis=-1, keepdims=True)
        logp = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    return float(logp[np.arange(len(hyp)), hyp].mean())


def greedy_batch(model: NmtModel, sources: list, max_len: int | None = None,
                 batch_size: int = 256) -> list[list[int]]:
    """Batched argmax decoding (lowest id on ties); each output ends at its first eos."""
    max_len = model.config.max_len if max_len is None else max_len
    out: list[list[int]] = []
    with no_grad():
        for start in range(0, len(sources), batch_size):
            chunk = [list(s) for s in sources[start:start + batch_size]]
            width = max(len(s) for s in chunk)
            src = np.full((len(chunk), width), PAD, dtype=np.int64)
            for i, s in enumerate(chunk):
                src[i, :len(s)] = s
            pad = src == PAD
            memory = model.encode(src, pad).data
            prefixes = np.full((len(chunk), 1), BOS, dtype=np.int64)
            done = np.zeros(len(chunk), dtype=bool)
            for _ in range(max_len):
                logp = _log_probs(model, memory, pad, prefixes)
                nxt = logp.argmax(axis=1)
                nxt = np.where(done, PAD, nxt)
                prefixes = np.concatenate([prefixes, nxt[:, None]], axis=1)
                done |= nxt == EOS
                if done.all():
                    break
            for row in prefixes[:, 1:]:
                seq = []
                for tok in row:
                    if tok == PAD:
                        break
                    seq.append(int(tok))
                    if tok == EOS:
                        break
                out.append(seq)
    return out
