"""Terms of the attack objective, all differentiable in the adversarial embeddings."""

from __future__ import annotations

import numpy as np

from ..diffcore import ops
from ..diffcore.tensor import Tensor
from ..models.lm import CausalLm, EmbeddingBridge, lm_nll
from ..models.nmt import NmtModel, nmt_loss
from .config import AttackConfig


def adv_loss(nmt: NmtModel, e_adv: Tensor, y_ref) -> Tensor:
    """Mean log-probability of the reference tokens under teacher forcing (minimized)."""
    return ops.scale(nmt_loss(nmt, e_adv, y_ref), -1.0)


def similarity_space(e, bridge: EmbeddingBridge | None):
    """Bridged vectors for ``lm_bridged``; identity when ``bridge`` is None."""
    if bridge is None:
        return e
    return bridge(e) if isinstance(e, Tensor) else bridge.apply(e)


def sim_loss(v_orig: np.ndarray, v_adv: Tensor) -> Tensor:
    """Mean cosine distance between fixed original vectors and adversarial ones, row-wise."""
    v_orig = np.asarray(v_orig, dtype=np.float64)
    if v_orig.shape != v_adv.shape:
        raise ValueError(f"sim_loss: lengths differ {v_orig.shape} vs {v_adv.shape}")
    orig_norm = np.linalg.norm(v_orig, axis=-1)
    adv_sq = ops.sum_(ops.mul(v_adv, v_adv), axis=-1)
    if np.any(orig_norm == 0) or np.any(adv_sq.data == 0):
        raise ValueError("sim_loss: zero-norm embedding vector")
    dots = ops.sum_(ops.mul(v_adv, Tensor(v_orig)), axis=-1)
    cos = ops.div(dots, ops.mul(ops.sqrt(adv_sq), Tensor(orig_norm)))
    return ops.sub(1.0, ops.mean(cos))


def fluency_loss(lm: CausalLm, bridge: EmbeddingBridge, e_adv: Tensor, targets) -> Tensor:
    return lm_nll(lm, bridge, bridge(e_adv), targets)


def total_objective(cfg: AttackConfig, adv: Tensor, sim: Tensor, lm: Tensor) -> Tensor:
    return ops.add(ops.add(adv, ops.scale(sim, cfg.alpha)), ops.scale(lm, cfg.beta))


def attack_objective(cfg: AttackConfig, nmt: NmtModel, lm: CausalLm, bridge: EmbeddingBridge,
                     e_adv: Tensor, y_ref, v_orig: np.ndarray, targets):
    """The full objective and its three parts, evaluated at ``e_adv``."""
    space_bridge = bridge if cfg.embedding_space == "lm_bridged" else None
    adv = adv_loss(nmt, e_adv, y_ref)
    sim = sim_loss(v_orig, similarity_space(e_adv, space_bridge))
    flu = fluency_loss(lm, bridge, e_adv, targets)
    return total_objective(cfg, adv, sim, flu), (adv, sim, flu)
