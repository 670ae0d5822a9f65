"""Perplexity and embedding-similarity scores backed by the trained LM and bridge."""

from __future__ import annotations

import math

import numpy as np

from ..diffcore.tensor import Tensor, no_grad
from ..models.lm import CausalLm, EmbeddingBridge, lm_nll


def _table(source) -> np.ndarray:
    return source if isinstance(source, np.ndarray) else source.src_embeddings


def perplexity(lm: CausalLm, bridge: EmbeddingBridge, source, ids) -> float:
    """exp(mean NLL) of the discrete sentence ``ids``; ``source`` is an NMT model or its table."""
    ids = np.asarray(ids, dtype=np.int64)
    with no_grad():
        v = bridge(Tensor(_table(source)[ids]))
        return math.exp(float(lm_nll(lm, bridge, v, ids).data))


def pooled_embedding(bridge: EmbeddingBridge, source, ids) -> np.ndarray:
    return bridge.apply(_table(source)[np.asarray(ids, dtype=np.int64)]).mean(axis=0)


def semantic_similarity(orig_ids, adv_ids, source, bridge: EmbeddingBridge) -> float:
    """Cosine between mean-pooled bridged embeddings of two sentences.

    An empty sentence is similar only to another empty one.
    """
    if len(orig_ids) == 0 or len(adv_ids) == 0:
        return 1.0 if len(orig_ids) == len(adv_ids) else 0.0
    a = pooled_embedding(bridge, source, orig_ids)
    b = pooled_embedding(bridge, source, adv_ids)
    if np.array_equal(np.asarray(orig_ids), np.asarray(adv_ids)):
        return 1.0
    cos = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
    return max(-1.0, min(1.0, cos))
