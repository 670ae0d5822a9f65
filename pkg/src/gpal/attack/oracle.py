"""Query-only access to a translation model, and the quality scores built on it."""

from __future__ import annotations

from functools import partial

from ..metrics.bleu import bleu_sentence
from ..metrics.chrf import chrf
from ..models.decoding import translate
from ..models.nmt import NmtModel
from ..textcore.corpus import strip_eos
from ..textcore.vocab import Vocabulary


class TranslationOracle:
    """Wraps a model as ``source ids -> translation ids``; counts every call."""

    def __init__(self, model: NmtModel, beam_size: int = 4):
        self.model = model
        self.beam_size = beam_size
        self.calls = 0

    @property
    def vocab_src(self) -> Vocabulary:
        return self.model.vocab_src

    @property
    def vocab_tgt(self) -> Vocabulary:
        return self.model.vocab_tgt

    def __call__(self, source_ids) -> list[int]:
        self.calls += 1
        return translate(self.model, list(source_ids), beam_size=self.beam_size)


def quality(metric: str, hypothesis_ids, reference_ids, vocab: Vocabulary) -> float:
    """Sentence quality of a translation against a reference, both as id sequences.

    An empty translation scores 0 under either metric.
    """
    hyp = strip_eos(hypothesis_ids)
    ref = strip_eos(reference_ids)
    if not hyp:
        return 0.0
    if metric == "sentence_bleu":
        return bleu_sentence(hyp, ref)
    if metric == "chrf":
        return chrf(vocab.detokenize(hyp), vocab.detokenize(ref))
    raise ValueError(f"unknown quality metric {metric!r}")


def quality_fn(metric: str, vocab: Vocabulary):
    return partial(quality, metric, vocab=vocab)
