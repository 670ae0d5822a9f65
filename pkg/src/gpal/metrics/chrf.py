from __future__ import annotations

from collections import Counter

CHRF_ORDER = 6
CHRF_BETA = 2.0


def _char_ngrams(text: str, n: int) -> Counter:
    return Counter(text[i:i + n] for i in range(len(text) - n + 1))


def chrf(hypothesis: str, reference: str, order: int = CHRF_ORDER, beta: float = CHRF_BETA) -> float:
    """Character n-gram F-score in [0, 100] over whitespace-stripped text.

    Precision and recall are macro-averaged over the orders that occur on at
    least one side, then combined with recall weighted by ``beta``.
    """
    hyp = "".join(hypothesis.split())
    ref = "".join(reference.split())
    precisions, recalls = [], []
    for n in range(1, order + 1):
        h = _char_ngrams(hyp, n)
        r = _char_ngrams(ref, n)
        nh, nr = sum(h.values()), sum(r.values())
        if nh == 0 and nr == 0:
            continue
        match = sum(min(c, r[g]) for g, c in h.items())
        precisions.append(match / nh if nh else 0.0)
        recalls.append(match / nr if nr else 0.0)
    if not precisions:
        return 0.0
    p = sum(precisions) / len(precisions)
    rc = sum(recalls) / len(recalls)
    b2 = beta * beta
    denom = b2 * p + rc
    if denom == 0.0:
        return 0.0
    return 100.0 * (1 + b2) * p * rc / denom
