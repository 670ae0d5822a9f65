from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .vocab import EOS, Vocabulary


class CorpusFormatError(ValueError):
    """Malformed TSV lines; ``errors`` holds ``(line_number, message)``."""

    def __init__(self, path, errors: list[tuple[int, str]]):
        self.path = str(path)
        self.errors = errors
        shown = "; ".join(f"line {n}: {m}" for n, m in errors[:5])
        more = f" (+{len(errors) - 5} more)" if len(errors) > 5 else ""
        super().__init__(f"{self.path}: {shown}{more}")


@dataclass(frozen=True)
class SentencePair:
    source: tuple[int, ...]
    reference: tuple[int, ...]
    source_text: str
    reference_text: str

    @classmethod
    def encode(cls, source_text: str, reference_text: str, vocab_src: Vocabulary,
               vocab_tgt: Vocabulary) -> "SentencePair":
        return cls(tuple(vocab_src.encode(source_text)), tuple(vocab_tgt.encode(reference_text)),
                   source_text, reference_text)


@dataclass
class Corpus:
    pairs: list[tuple[str, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Corpus(self.pairs[idx])
        return self.pairs[idx]

    @property
    def sources(self) -> list[str]:
        return [s for s, _ in self.pairs]

    @property
    def targets(self) -> list[str]:
        return [t for _, t in self.pairs]

    def swapped(self) -> "Corpus":
        return Corpus([(t, s) for s, t in self.pairs])

    def split(self, n_heldout: int) -> tuple["Corpus", "Corpus"]:
        """``(train, heldout)`` with the held-out part taken from the end."""
        cut = len(self.pairs) - n_heldout
        return Corpus(self.pairs[:cut]), Corpus(self.pairs[cut:])

    def encode(self, vocab_src: Vocabulary, vocab_tgt: Vocabulary) -> list[SentencePair]:
        return [SentencePair.encode(s, t, vocab_src, vocab_tgt) for s, t in self.pairs]


def save_tsv(corpus: Corpus, path, manifest: dict | None = None) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for src, tgt in corpus.pairs:
            fh.write(f"{src}\t{tgt}\n")
    if manifest is not None:
        with open(manifest_path(path), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return path


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def load_tsv(path) -> Corpus:
    errors: list[tuple[int, str]] = []
    pairs: list[tuple[str, str]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            parts = line.split("\t")
            if len(parts) != 2:
                errors.append((n, "expected exactly one tab separator"))
            elif not parts[0].strip() or not parts[1].strip():
                errors.append((n, "empty side"))
            else:
                pairs.append((parts[0], parts[1]))
    if errors:
        raise CorpusFormatError(path, errors)
    return Corpus(pairs)


def strip_eos(ids) -> list[int]:
    ids = list(ids)
    return ids[:-1] if ids and ids[-1] == EOS else ids
