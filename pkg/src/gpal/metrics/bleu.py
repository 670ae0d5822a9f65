"""Token-level BLEU (case-sensitive, 4-gram, single reference)."""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Sequence

MAX_ORDER = 4
FLOOR = 0.1


class MetricError(ValueError):
    pass


def ngram_counts(tokens: Sequence, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def ngram_stats(hypothesis: Sequence, reference: Sequence, max_order: int = MAX_ORDER):
    """Per-order clipped matches and candidate n-gram totals."""
    matches, totals = [], []
    for n in range(1, max_order + 1):
        h = ngram_counts(hypothesis, n)
        r = ngram_counts(reference, n)
        matches.append(sum(min(c, r[g]) for g, c in h.items()))
        totals.append(max(len(hypothesis) - n + 1, 0))
    return matches, totals


def brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len == 0:
        return 0.0
    return math.exp(min(0.0, 1.0 - ref_len / hyp_len))


def _tokens(x) -> list:
    return x.split() if isinstance(x, str) else list(x)


def bleu_corpus(hypotheses: Sequence, references: Sequence, max_order: int = MAX_ORDER) -> float:
    """Pooled-count BLEU in [0, 100].  Inputs are token lists or whitespace strings."""
    if len(hypotheses) != len(references):
        raise MetricError("hypothesis and reference counts differ")
    if not hypotheses:
        raise MetricError("empty corpus")
    matches = [0] * max_order
    totals = [0] * max_order
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp, ref = _tokens(hyp), _tokens(ref)
        m, t = ngram_stats(hyp, ref, max_order)
        matches = [a + b for a, b in zip(matches, m)]
        totals = [a + b for a, b in zip(totals, t)]
        hyp_len += len(hyp)
        ref_len += len(ref)
    if min(matches) == 0:
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matches, totals)) / max_order
    return 100.0 * brevity_penalty(hyp_len, ref_len) * math.exp(log_p)


def bleu_sentence(hypothesis, reference, max_order: int = MAX_ORDER) -> float:
    """Single-pair BLEU with floor smoothing.

    An order with candidates but no matches uses precision ``0.1 / count``;
    orders the hypothesis is too short to have are dropped from the geometric
    mean.
    """
    hyp, ref = _tokens(hypothesis), _tokens(reference)
    if not hyp or not ref:
        raise MetricError("sentence BLEU needs non-empty hypothesis and reference")
    matches, totals = ngram_stats(hyp, ref, max_order)
    logs = []
    for m, t in zip(matches, totals):
        if t == 0:
            continue
        logs.append(math.log((m if m > 0 else FLOOR) / t))
    return 100.0 * brevity_penalty(len(hyp), len(ref)) * math.exp(sum(logs) / len(logs))
