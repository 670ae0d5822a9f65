"""Translation-quality and attack-quality metrics."""

from .bleu import MetricError, bleu_corpus, bleu_sentence, brevity_penalty, ngram_counts, ngram_stats
from .chrf import chrf
from .summary import SUMMARY_FIELDS, SentenceScores, SummaryTable, summarize
from .ter import levenshtein, token_error_rate

__all__ = [
    "MetricError", "SUMMARY_FIELDS", "SentenceScores", "SummaryTable", "bleu_corpus",
    "bleu_sentence", "brevity_penalty", "chrf", "levenshtein", "ngram_counts", "ngram_stats",
    "perplexity", "semantic_similarity", "summarize", "token_error_rate",
]


def __getattr__(name):
    # semantic scores import the model stack; load lazily to keep the metric core light
    if name in ("perplexity", "semantic_similarity", "pooled_embedding"):
        from . import semantic
        return getattr(semantic, name)
    raise AttributeError(name)
