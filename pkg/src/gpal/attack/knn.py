"""Single-pass nearest-neighbour substitution baseline."""

from __future__ import annotations

import math

import numpy as np

from ..diffcore.tensor import Tensor, backward
from ..models.lm import CausalLm, EmbeddingBridge
from ..models.nmt import NmtModel, nmt_loss
from ..models.training import freeze
from ..textcore.corpus import SentencePair
from ..textcore.vocab import EOS
from .config import KnnConfig
from .oracle import TranslationOracle, quality
from .projection import build_index
from .transfool import CRITERION_MET, MAX_ITERATIONS, AttackOutcome


def loss_gradients(nmt: NmtModel, source, reference) -> np.ndarray:
    """Gradient of the translation loss (= -adv_loss) w.r.t. each source embedding."""
    e = Tensor(nmt.src_embeddings[np.asarray(source)], requires_grad=True)
    return backward(nmt_loss(nmt, e, reference), inputs=[e])[e]


def select_positions(grad: np.ndarray, source, fraction: float) -> list[int]:
    """Highest gradient-norm positions (eos excluded), earlier position on ties."""
    candidates = [i for i, t in enumerate(source) if t != EOS]
    n = math.ceil(fraction * len(candidates))
    norms = np.linalg.norm(grad, axis=1)
    ranked = sorted(candidates, key=lambda i: (-norms[i], i))
    return sorted(ranked[:n])


def neighbours(index_rows: np.ndarray, allowed: np.ndarray, token: int, k: int) -> list[int]:
    """``k`` most cosine-similar allowed tokens to ``token`` (itself excluded)."""
    sims = index_rows @ index_rows[token]
    sims[~allowed] = -np.inf
    sims[token] = -np.inf
    order = np.lexsort((np.arange(len(sims)), -sims))
    return [int(i) for i in order[:k] if np.isfinite(sims[i])]


def best_substitute(table: np.ndarray, candidates: list[int], e_i: np.ndarray, g_i: np.ndarray) -> int:
    """Candidate maximizing the first-order increase of the translation loss."""
    scores = (table[candidates] - e_i) @ g_i
    return candidates[int(np.argmax(scores))]


def run_knn_baseline(cfg: KnnConfig, nmt: NmtModel, lm: CausalLm, bridge: EmbeddingBridge,
                     pair: SentencePair, oracle: TranslationOracle | None = None,
                     original_translation=None) -> AttackOutcome:
    freeze(nmt, lm, bridge)
    oracle = oracle or TranslationOracle(nmt, cfg.beam_size)
    src = [int(t) for t in pair.source]
    table = nmt.src_embeddings
    if original_translation is None:
        original_translation = oracle(src)
    q_orig = quality(cfg.quality_metric, original_translation, pair.reference, oracle.vocab_tgt)
    thr = q_orig * cfg.lam
    grad = loss_gradients(nmt, src, pair.reference)
    index = build_index(table, bridge, cfg.embedding_space)
    allowed = index.allowed_mask
    adv = list(src)
    for i in select_positions(grad, src, cfg.replace_fraction):
        cands = neighbours(index.rows, allowed, src[i], cfg.neighbors)
        if cands:
            adv[i] = best_substitute(table, cands, table[src[i]], grad[i])
    if adv == src:
        translation, q_adv, queries = list(original_translation), q_orig, 0
    else:
        translation = oracle(adv)
        q_adv = quality(cfg.quality_metric, translation, pair.reference, oracle.vocab_tgt)
        queries = 1
    success = q_adv <= thr
    return AttackOutcome(success=success, adversarial=adv, original=src,
                         original_translation=list(original_translation),
                         adversarial_translation=list(translation), quality_orig=q_orig,
                         quality_adv=q_adv, iterations=1, queries=queries,
                         termination=CRITERION_MET if success else MAX_ITERATIONS)
