"""Deterministic synthetic translation task.

Source sentences are drawn from part-of-speech templates; a target sentence
is the source mapped word by word through a class-preserving bijective
lexicon, after which positions (1,2), (3,4), ... are swapped.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus

REORDER_PAIRWISE_SWAP = "pairwise-swap"

CLASS_SIZES = {
    "DET": 12, "PREP": 24, "CONJ": 8, "ADV": 96, "ADJ": 200, "VERB": 240, "NOUN": 420,
}

_ALPHABETS = {
    "src": ("bdfgklmnprstvz", "aeiou"),
    "L1": ("bcdfjlmnpqrstvx", "aeiouy"),
    "L2": ("dghkmnrstwz", "aeioäöü"),
}


@dataclass(frozen=True)
class SyntheticTaskSpec:
    seed: int
    class_sizes: dict[str, int]
    source_lexicon: dict[str, tuple[str, ...]]
    bilingual_maps: dict[str, dict[str, str]]
    templates: tuple[tuple[str, ...], ...]
    template_weights: tuple[float, ...]
    length_range: tuple[int, int] = (5, 15)
    reorder_rule: str = REORDER_PAIRWISE_SWAP
    languages: tuple[str, ...] = field(default=("L1", "L2"))

    @property
    def lexicon_size(self) -> int:
        return sum(len(words) for words in self.source_lexicon.values())

    def spec_hash(self) -> str:
        payload = json.dumps({
            "seed": self.seed,
            "class_sizes": self.class_sizes,
            "source_lexicon": self.source_lexicon,
            "bilingual_maps": self.bilingual_maps,
            "templates": self.templates,
            "template_weights": self.template_weights,
            "length_range": self.length_range,
            "reorder_rule": self.reorder_rule,
        }, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _make_words(rng: np.random.Generator, alphabet: tuple[str, str], n: int,
                taken: set[str]) -> list[str]:
    consonants, vowels = alphabet
    words: list[str] = []
    while len(words) < n:
        n_syl = int(rng.integers(2, 4))
        word = "".join(consonants[rng.integers(len(consonants))] + vowels[rng.integers(len(vowels))]
                       for _ in range(n_syl))
        if word not in taken:
            taken.add(word)
            words.append(word)
    return words


def _templates(length_range: tuple[int, int]):
    """Enumerate class templates with their grammar probabilities."""
    nps = [(("DET", "NOUN"), 0.4), (("DET", "ADJ", "NOUN"), 0.4), (("DET", "ADJ", "ADJ", "NOUN"), 0.2)]
    clauses = []
    for (subj, ps), adv, (obj, po), pp in itertools.product(
            nps, (False, True), nps, [None] + nps):
        seq = subj + ("VERB",) + (("ADV",) if adv else ()) + obj
        p = ps * (0.3 if adv else 0.7) * po
        if pp is None:
            p *= 0.6
        else:
            seq += ("PREP",) + pp[0]
            p *= 0.4 * pp[1]
        clauses.append((seq, p))
    out: dict[tuple[str, ...], float] = {}
    lo, hi = length_range
    for seq, p in clauses:
        if lo <= len(seq) <= hi:
            out[seq] = out.get(seq, 0.0) + 0.75 * p
    for (a, pa), (b, pb) in itertools.product(clauses, clauses):
        seq = a + ("CONJ",) + b
        if lo <= len(seq) <= hi:
            out[seq] = out.get(seq, 0.0) + 0.25 * pa * pb
    templates = tuple(sorted(out))
    weights = np.array([out[t] for t in templates])
    return templates, tuple(float(w) for w in weights / weights.sum())


def make_task(seed: int = 0, class_sizes: dict[str, int] | None = None,
              languages: tuple[str, ...] = ("L1", "L2"),
              length_range: tuple[int, int] = (5, 15)) -> SyntheticTaskSpec:
    class_sizes = dict(CLASS_SIZES if class_sizes is None else class_sizes)
    rng = np.random.default_rng(seed)
    taken: set[str] = set()
    source = {c: tuple(_make_words(rng, _ALPHABETS["src"], n, taken)) for c, n in class_sizes.items()}
    maps: dict[str, dict[str, str]] = {}
    for lang in languages:
        mapping: dict[str, str] = {}
        for c, words in source.items():
            target_words = _make_words(rng, _ALPHABETS.get(lang, _ALPHABETS["L1"]), len(words), taken)
            perm = rng.permutation(len(words))
            mapping.update({w: target_words[j] for w, j in zip(words, perm)})
        maps[lang] = mapping
    templates, weights = _templates(length_range)
    return SyntheticTaskSpec(seed, class_sizes, source, maps, templates, weights,
                             tuple(length_range), REORDER_PAIRWISE_SWAP, tuple(languages))


def reorder(tokens: list[str]) -> list[str]:
    """Swap positions (1,2), (3,4), ...; an odd trailing token stays put."""
    out = list(tokens)
    for i in range(0, len(out) - 1, 2):
        out[i], out[i + 1] = out[i + 1], out[i]
    return out


def translate_tokens(tokens: list[str], mapping: dict[str, str]) -> list[str]:
    return reorder([mapping[t] for t in tokens])


def invert_translation(tokens: list[str], mapping: dict[str, str]) -> list[str]:
    inverse = {v: k for k, v in mapping.items()}
    return [inverse[t] for t in reorder(tokens)]


def sample_sources(spec: SyntheticTaskSpec, n: int) -> list[list[str]]:
    rng = np.random.default_rng([spec.seed, 1])
    idx = rng.choice(len(spec.templates), size=n, p=np.asarray(spec.template_weights))
    out = []
    for t in idx:
        template = spec.templates[int(t)]
        words = [spec.source_lexicon[c][int(rng.integers(len(spec.source_lexicon[c])))]
                 for c in template]
        out.append(words)
    return out


def generate_corpus(spec: SyntheticTaskSpec, n_pairs: int, target_language: str) -> Corpus:
    """Deterministic parallel corpus; sources do not depend on the target language."""
    if n_pairs <= 0:
        raise ValueError("n_pairs must be positive")
    mapping = spec.bilingual_maps[target_language]
    sources = sample_sources(spec, n_pairs)
    return Corpus([(" ".join(s), " ".join(translate_tokens(s, mapping))) for s in sources])


def corpus_manifest(spec: SyntheticTaskSpec, corpus: Corpus, target_language: str) -> dict:
    return {
        "seed": spec.seed,
        "spec_hash": spec.spec_hash(),
        "target_language": target_language,
        "n_pairs": len(corpus),
        "lexicon_size": spec.lexicon_size,
        "n_templates": len(spec.templates),
    }
