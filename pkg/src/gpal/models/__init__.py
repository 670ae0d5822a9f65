"""Miniature transformer NMT, causal LM, embedding bridge and their training."""

from .checkpoint import CheckpointError, load_checkpoint, read_header, save_checkpoint
from .decoding import greedy_batch, sequence_score, translate
from .layers import TransformerConfig
from .lm import CausalLm, EmbeddingBridge, lm_nll
from .nmt import NmtModel, SequenceLengthError, nmt_loss
from .training import (
    TrainingDiverged,
    TrainingHistory,
    corpus_perplexity,
    freeze,
    train_lm_and_bridge,
    train_nmt,
    unigram_perplexity,
)

__all__ = [
    "CausalLm", "CheckpointError", "EmbeddingBridge", "NmtModel", "SequenceLengthError", "TrainingDiverged",
    "TrainingHistory", "TransformerConfig", "corpus_perplexity", "freeze", "greedy_batch", "lm_nll", "load_checkpoint",
    "nmt_loss", "read_header", "save_checkpoint", "sequence_score", "train_lm_and_bridge", "train_nmt", "translate",
    "unigram_perplexity",
]
