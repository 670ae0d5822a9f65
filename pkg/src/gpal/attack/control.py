from __future__ import annotations

import numpy as np

from ..textcore.vocab import EOS, SPECIAL_IDS


def random_substitution(source, n_changes: int, vocab_size: int, rng: np.random.Generator) -> list[int]:
    """Replace ``n_changes`` non-eos positions by uniformly drawn different regular tokens."""
    src = [int(t) for t in source]
    positions = [i for i, t in enumerate(src) if t != EOS]
    n = min(max(int(n_changes), 0), len(positions))
    out = list(src)
    if n == 0:
        return out
    first = len(SPECIAL_IDS)
    for i in sorted(rng.choice(positions, size=n, replace=False)):
        tok = out[i]
        while tok == src[i]:
            tok = int(rng.integers(first, vocab_size))
        out[i] = tok
    return out
