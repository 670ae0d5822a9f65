from __future__ import annotations

import logging
import time
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from ..diffcore.optim import Adam
from ..diffcore.tensor import Tensor, backward, no_grad
from ..textcore.corpus import Corpus, strip_eos
from ..textcore.vocab import PAD, Vocabulary, build_vocab
from .decoding import greedy_batch
from .layers import TransformerConfig
from .lm import CausalLm, EmbeddingBridge, lm_batch_loss
from .nmt import NmtModel, nmt_loss

log = logging.getLogger(__name__)

TRAIN_LR = 1e-3
BATCH_SIZE = 64


class TrainingDiverged(RuntimeError):
    """Non-finite loss; ``last_good`` holds the model from before the bad step."""

    def __init__(self, message: str, last_good):
        super().__init__(message)
        self.last_good = last_good


@dataclass
class TrainingHistory:
    losses: list[float] = field(default_factory=list)
    epoch_loss: list[float] = field(default_factory=list)
    heldout: list[float] = field(default_factory=list)
    seconds: float = 0.0


def pad_batch(seqs: list, pad: int = PAD) -> np.ndarray:
    width = max(len(s) for s in seqs)
    out = np.full((len(seqs), width), pad, dtype=np.int64)
    for i, s in enumerate(seqs):
        out[i, :len(s)] = s
    return out


def _batches(lengths: list[int], batch_size: int, rng: np.random.Generator, pool: int = 50):
    """Shuffled batches of similar length: sort within pools of ``pool`` batches."""
    order = rng.permutation(len(lengths))
    lengths = np.asarray(lengths)
    batches = []
    span = batch_size * pool
    for start in range(0, len(order), span):
        chunk = order[start:start + span]
        chunk = chunk[np.argsort(lengths[chunk], kind="stable")]
        batches.extend(chunk[i:i + batch_size] for i in range(0, len(chunk), batch_size))
    for j in rng.permutation(len(batches)):
        yield batches[j]


def _snapshot(params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    return {k: v.data.copy() for k, v in params.items()}


def _restore(params: dict[str, Tensor], snap: dict[str, np.ndarray]) -> None:
    for k, v in snap.items():
        params[k].data = v


def train_nmt(corpus: Corpus, config: TransformerConfig | None = None, epochs: int = 30,
              seed: int = 0, heldout: Corpus | None = None, vocab_src: Vocabulary | None = None,
              vocab_tgt: Vocabulary | None = None, batch_size: int = BATCH_SIZE,
              lr: float = TRAIN_LR, eval_size: int = 200, stop_bleu: float | None = None,
              callback: Callable | None = None) -> tuple[NmtModel, TrainingHistory]:
    """Adam + teacher forcing.  Held-out greedy corpus BLEU is logged per epoch.

    ``stop_bleu`` ends training early once the per-epoch held-out BLEU reaches it.
    """
    from ..metrics.bleu import bleu_corpus

    if len(corpus) == 0:
        raise ValueError("cannot train on an empty corpus")
    config = config or TransformerConfig()
    vocab_src = vocab_src or build_vocab(corpus.sources)
    vocab_tgt = vocab_tgt or build_vocab(corpus.targets)
    model = NmtModel(config, vocab_src, vocab_tgt, seed=seed)
    src = [vocab_src.encode(s) for s in corpus.sources]
    tgt = [vocab_tgt.encode(t) for t in corpus.targets]
    rng = np.random.default_rng([seed, 7])
    opt = Adam(list(model.params.values()), lr=lr)
    history = TrainingHistory()
    eval_pairs = heldout.encode(vocab_src, vocab_tgt)[:eval_size] if heldout is not None else []
    last_good = None
    t0 = time.perf_counter()
    for epoch in range(epochs):
        total, count = 0.0, 0
        for idx in _batches([max(len(a), len(b)) for a, b in zip(src, tgt)], batch_size, rng):
            xs = pad_batch([src[i] for i in idx])
            ys = pad_batch([tgt[i] for i in idx])
            loss = nmt_loss(model, xs, ys, src_pad=xs == PAD, rng=rng)
            value = float(loss.data)
            if not np.isfinite(value):
                if last_good is not None:
                    _restore(model.params, last_good)
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}", model)
            last_good = _snapshot(model.params)
            opt.step(backward(loss))
            history.losses.append(value)
            total += value * len(idx)
            count += len(idx)
        history.epoch_loss.append(total / count)
        if eval_pairs:
            hyps = greedy_batch(model, [p.source for p in eval_pairs])
            score = bleu_corpus([strip_eos(h) for h in hyps],
                                [list(p.reference[:-1]) for p in eval_pairs])
            history.heldout.append(score)
            log.info("nmt epoch %d loss %.4f heldout BLEU %.2f", epoch + 1, total / count, score)
        if callback is not None:
            callback(epoch, model, history)
        if stop_bleu is not None and history.heldout and history.heldout[-1] >= stop_bleu:
            break
    history.seconds = time.perf_counter() - t0
    return model, history


def train_lm_and_bridge(sources: list[str], nmt: NmtModel, config: TransformerConfig | None = None,
                        epochs: int = 5, seed: int = 0, batch_size: int = BATCH_SIZE,
                        lr: float = TRAIN_LR, heldout: list[str] | None = None,
                        callback: Callable | None = None):
    """Jointly fit a causal LM and the bridge on ``FC(E_src[token])`` inputs.

    The NMT source table is read, never updated.
    """
    if not sources:
        raise ValueError("cannot train on an empty corpus")
    config = config or TransformerConfig()
    table = nmt.src_embeddings.copy()
    vocab = nmt.vocab_src
    rng = np.random.default_rng([seed, 11])
    lm = CausalLm(config, vocab, seed=seed)
    bridge = EmbeddingBridge.initialize(table.shape[1], config.d_model, table[1], rng)
    params = list(lm.params.values()) + [bridge.fc]
    opt = Adam(params, lr=lr)
    ids = [vocab.encode(s) for s in sources]
    history = TrainingHistory()
    last_good = None
    t0 = time.perf_counter()
    for epoch in range(epochs):
        total, count = 0.0, 0
        for idx in _batches([len(x) for x in ids], batch_size, rng):
            batch = pad_batch([ids[i] for i in idx])
            loss = lm_batch_loss(lm, bridge, table, batch, rng)
            value = float(loss.data)
            if not np.isfinite(value):
                if last_good is not None:
                    _restore(lm.params, last_good[0])
                    bridge.fc.data = last_good[1]
                raise TrainingDiverged(f"non-finite LM loss at epoch {epoch}", (lm, bridge))
            last_good = (_snapshot(lm.params), bridge.fc.data.copy())
            opt.step(backward(loss))
            history.losses.append(value)
            total += value * len(idx)
            count += len(idx)
        history.epoch_loss.append(total / count)
        if heldout:
            history.heldout.append(corpus_perplexity(lm, bridge, table, heldout[:500]))
            log.info("lm epoch %d loss %.4f heldout ppl %.2f", epoch + 1, total / count,
                     history.heldout[-1])
        if callback is not None:
            callback(epoch, (lm, bridge), history)
    history.seconds = time.perf_counter() - t0
    return lm, bridge, history


def corpus_perplexity(lm: CausalLm, bridge: EmbeddingBridge, table: np.ndarray,
                      sentences: list[str]) -> float:
    """exp of the token-weighted mean NLL over ``sentences`` (eos included)."""
    vocab = lm.vocab
    total, count = 0.0, 0
    with no_grad():
        for start in range(0, len(sentences), 256):
            chunk = [vocab.encode(s) for s in sentences[start:start + 256]]
            batch = pad_batch(chunk)
            n = int((batch != PAD).sum())
            total += float(lm_batch_loss(lm, bridge, table, batch).data) * n
            count += n
    return float(np.exp(total / count))


def unigram_perplexity(train_sentences: list[str], test_sentences: list[str],
                       vocab: Vocabulary) -> float:
    """Add-one smoothed unigram model over the same tokens (eos included)."""
    counts = np.ones(len(vocab))
    for s in train_sentences:
        for i in vocab.encode(s):
            counts[i] += 1
    logp = np.log(counts / counts.sum())
    nll, n = 0.0, 0
    for s in test_sentences:
        ids = vocab.encode(s)
        nll -= logp[ids].sum()
        n += len(ids)
    return float(np.exp(nll / n))


def freeze(*models) -> None:
    """Mark model parameters (and bridge matrices) as constants."""
    for m in models:
        if isinstance(m, EmbeddingBridge):
            m.fc.requires_grad = False
        elif m is not None:
            m.requires_grad_(False)
