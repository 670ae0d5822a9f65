"""Gradient-projection attack loop with the loop-avoidance set."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..diffcore.optim import AdamState, adam_step
from ..diffcore.tensor import Tensor, backward
from ..models.lm import CausalLm, EmbeddingBridge
from ..models.training import freeze
from ..models.nmt import NmtModel
from ..textcore.corpus import SentencePair
from ..textcore.vocab import EOS
from .config import LM_BRIDGED, AttackConfig
from .losses import attack_objective, similarity_space
from .oracle import TranslationOracle, quality
from .projection import ProjectionIndex, build_index, project_tokens

CRITERION_MET = "criterion_met"
MAX_ITERATIONS = "max_iterations"


def should_stop(quality_value: float, thr: float) -> bool:
    """Inclusive threshold test on the candidate's translation quality."""
    return quality_value <= thr


@dataclass
class AttackState:
    e_g: Tensor
    e_p: np.ndarray
    tokens: np.ndarray
    visited: dict[tuple[int, ...], tuple[list[int], float]]
    adam: AdamState
    thr: float
    iteration: int = 0
    queries: int = 0
    best: tuple[int, ...] | None = None
    best_quality: float = float("inf")


@dataclass
class AttackOutcome:
    success: bool
    adversarial: list[int]
    original: list[int]
    original_translation: list[int]
    adversarial_translation: list[int]
    quality_orig: float
    quality_adv: float
    iterations: int
    queries: int
    termination: str
    trace: list[dict] = field(default_factory=list, repr=False)

    @property
    def ratio(self) -> float:
        return self.quality_adv / self.quality_orig if self.quality_orig > 0 else float("inf")


def _prepare(cfg: AttackConfig, nmt: NmtModel, bridge: EmbeddingBridge,
             index: ProjectionIndex | None) -> ProjectionIndex:
    if index is None:
        index = build_index(nmt.src_embeddings, bridge, cfg.embedding_space)
    elif index.embedding_space != cfg.embedding_space:
        raise ValueError("projection index built for a different embedding space")
    return index


def run_attack(cfg: AttackConfig, grad_model: NmtModel, oracle, lm: CausalLm,
               bridge: EmbeddingBridge, source, grad_reference, oracle_reference,
               index: ProjectionIndex | None = None, original_translation=None,
               keep_trace: bool = False) -> AttackOutcome:
    """Shared loop: gradients from ``grad_model``, stopping decisions from ``oracle``.

    ``grad_reference`` is the reference in the gradient model's target
    vocabulary, ``oracle_reference`` the one the oracle's outputs are scored
    against.  ``original_translation`` (the oracle's output for ``source``)
    is computed if not supplied; it does not count as a query.
    """
    index = _prepare(cfg, grad_model, bridge, index)
    freeze(grad_model, lm, bridge)
    table = grad_model.src_embeddings
    x = np.asarray(source, dtype=np.int64)
    y_ref = np.asarray(grad_reference, dtype=np.int64)
    vocab_oracle = oracle.vocab_tgt

    if original_translation is None:
        original_translation = oracle(list(x))
    q_orig = quality(cfg.quality_metric, original_translation, oracle_reference, vocab_oracle)
    thr = q_orig * cfg.lam

    e_x = table[x].copy()
    pinned = x == EOS
    space_bridge = bridge if cfg.embedding_space == LM_BRIDGED else None
    v_orig = similarity_space(e_x, space_bridge)
    e_g = Tensor(e_x.copy(), requires_grad=True, name="e_g")
    state = AttackState(e_g=e_g, e_p=e_x.copy(), tokens=x.copy(), visited={},
                        adam=AdamState.for_params([e_g]), thr=thr)
    last = tuple(int(t) for t in x)
    trace: list[dict] = []
    termination = MAX_ITERATIONS
    success = False

    while state.iteration < cfg.max_iter:
        state.iteration += 1
        e_g.grad = None
        total, parts = attack_objective(cfg, grad_model, lm, bridge, e_g, y_ref, v_orig, state.tokens)
        grads = backward(total, inputs=[e_g])
        adam_step([e_g], [grads[e_g]], state.adam, cfg.gamma)
        ids, e_p = project_tokens(index, bridge, e_g.data, table, pinned)
        state.e_p = e_p
        key = tuple(int(t) for t in ids)
        last = key
        if keep_trace:
            trace.append({"iteration": state.iteration, "objective": float(total.data),
                          "adv": float(parts[0].data), "sim": float(parts[1].data),
                          "lm": float(parts[2].data), "tokens": list(key)})
        if key in state.visited:
            continue
        translation = oracle(list(key))
        state.queries += 1
        q = quality(cfg.quality_metric, translation, oracle_reference, vocab_oracle)
        state.visited[key] = (translation, q)
        e_g.data = e_p.copy()
        state.tokens = ids
        if q < state.best_quality:
            state.best, state.best_quality = key, q
        if should_stop(q, thr):
            termination = CRITERION_MET
            success = True
            break

    if state.iteration == 0 or not state.visited:
        adv = tuple(int(t) for t in x)
        adv_translation, q_adv = list(original_translation), q_orig
    else:
        if cfg.return_policy == "best_seen" and not success:
            chosen = state.best
        else:
            chosen = last
        adv = chosen
        adv_translation, q_adv = state.visited[chosen]
    return AttackOutcome(
        success=success, adversarial=list(adv), original=[int(t) for t in x],
        original_translation=list(original_translation), adversarial_translation=list(adv_translation),
        quality_orig=q_orig, quality_adv=q_adv, iterations=state.iteration, queries=state.queries,
        termination=termination, trace=trace)


def run_transfool(cfg: AttackConfig, nmt: NmtModel, lm: CausalLm, bridge: EmbeddingBridge,
                  pair: SentencePair, oracle: TranslationOracle | None = None,
                  index: ProjectionIndex | None = None, original_translation=None,
                  keep_trace: bool = False) -> AttackOutcome:
    """White-box attack: the oracle defaults to ``nmt`` itself."""
    oracle = oracle or TranslationOracle(nmt, cfg.beam_size)
    return run_attack(cfg, nmt, oracle, lm, bridge, pair.source, pair.reference, pair.reference,
                      index=index, original_translation=original_translation, keep_trace=keep_trace)


def run_blackbox(cfg: AttackConfig, reference_model: NmtModel, target_oracle: TranslationOracle,
                 lm: CausalLm, bridge: EmbeddingBridge, pair: SentencePair, target_reference,
                 index: ProjectionIndex | None = None, original_translation=None) -> AttackOutcome:
    """Gradients from ``reference_model``; thresholds and stopping via ``target_oracle``.

    ``pair.reference`` is in the reference model's target language and
    ``target_reference`` in the target model's (they differ cross-lingually).
    """
    if target_oracle.vocab_src != reference_model.vocab_src:
        raise ValueError("reference and target models must share the source vocabulary")
    return run_attack(cfg, reference_model, target_oracle, lm, bridge, pair.source, pair.reference,
                      target_reference, index=index, original_translation=original_translation)
