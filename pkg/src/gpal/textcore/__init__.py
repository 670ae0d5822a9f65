"""Vocabularies, corpora and the synthetic translation task."""

from .corpus import Corpus, CorpusFormatError, SentencePair, load_tsv, manifest_path, save_tsv, strip_eos
from .synthetic import (
    SyntheticTaskSpec,
    corpus_manifest,
    generate_corpus,
    invert_translation,
    make_task,
    reorder,
    translate_tokens,
)
from .vocab import BOS, EOS, PAD, SPECIAL_IDS, SPECIAL_TOKENS, UNK, Vocabulary, VocabularyError, build_vocab

__all__ = [
    "BOS", "EOS", "PAD", "SPECIAL_IDS", "SPECIAL_TOKENS", "UNK", "Corpus", "CorpusFormatError",
    "SentencePair", "SyntheticTaskSpec", "Vocabulary", "VocabularyError", "build_vocab",
    "corpus_manifest", "generate_corpus", "invert_translation", "load_tsv", "make_task",
    "manifest_path", "reorder", "save_tsv", "strip_eos", "translate_tokens",
]
