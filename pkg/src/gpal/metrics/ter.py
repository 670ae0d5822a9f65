from __future__ import annotations

from collections.abc import Sequence


def levenshtein(a: Sequence, b: Sequence) -> int:
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def token_error_rate(original: Sequence, adversarial: Sequence) -> float:
    """Percentage of original tokens edited (token-level Levenshtein)."""
    if len(original) == 0:
        raise ValueError("token_error_rate needs a non-empty original")
    return 100.0 * levenshtein(original, adversarial) / len(original)
