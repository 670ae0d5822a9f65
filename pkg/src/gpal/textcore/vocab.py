from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Sequence

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIAL_TOKENS = ("<pad>", "<bos>", "<eos>", "<unk>")
SPECIAL_IDS = (PAD, BOS, EOS, UNK)


class VocabularyError(ValueError):
    pass


class Vocabulary:
    """Token <-> id bijection with pad/bos/eos/unk at ids 0..3."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tuple(tokens[:4]) != SPECIAL_TOKENS:
            tokens = list(SPECIAL_TOKENS) + [t for t in tokens if t not in SPECIAL_TOKENS]
        self.itos = tokens
        self.stoi = {t: i for i, t in enumerate(tokens)}
        if len(self.stoi) != len(self.itos):
            raise VocabularyError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.itos == other.itos

    def __hash__(self):
        return hash(tuple(self.itos))

    def __repr__(self) -> str:
        return f"Vocabulary(size={len(self)})"

    def id(self, token: str) -> int:
        return self.stoi.get(token, UNK)

    def token(self, idx: int) -> str:
        if not 0 <= idx < len(self.itos):
            raise VocabularyError(f"id {idx} out of range for vocabulary of size {len(self)}")
        return self.itos[idx]

    def tokenize(self, text: str) -> list[int]:
        words = text.split()
        if not words:
            raise VocabularyError("cannot tokenize empty text")
        return [self.stoi.get(w, UNK) for w in words]

    def encode(self, text: str) -> list[int]:
        """Token ids followed by the terminal eos."""
        return self.tokenize(text) + [EOS]

    def detokenize(self, ids: Iterable[int], strip_special: bool = True) -> str:
        out = []
        for i in ids:
            i = int(i)
            word = self.token(i)
            if strip_special and i in (PAD, BOS, EOS):
                continue
            out.append(word)
        return " ".join(out)

    @property
    def regular_ids(self) -> range:
        return range(len(SPECIAL_TOKENS), len(self))


def build_vocab(sentences: Iterable[str], max_size: int | None = None) -> Vocabulary:
    """Frequency-ranked vocabulary, ties broken lexicographically, specials first.

    ``max_size`` bounds the total size including the four reserved entries.
    """
    counts = Counter()
    n = 0
    for s in sentences:
        counts.update(s.split())
        n += 1
    if n == 0:
        raise VocabularyError("cannot build a vocabulary from an empty corpus")
    ranked = sorted((t for t in counts if t not in SPECIAL_TOKENS), key=lambda t: (-counts[t], t))
    if max_size is not None:
        ranked = ranked[: max(0, max_size - len(SPECIAL_TOKENS))]
    return Vocabulary(list(SPECIAL_TOKENS) + ranked)
