"""Gradient-projection attack, its objective, and baselines."""

from .config import EMBEDDING_SPACES, LM_BRIDGED, NMT_RAW, AttackConfig, AttackConfigError, KnnConfig
from .control import random_substitution
from .knn import run_knn_baseline
from .losses import adv_loss, attack_objective, fluency_loss, sim_loss, total_objective
from .oracle import TranslationOracle, quality
from .projection import ProjectionError, ProjectionIndex, build_index, project_tokens
from .transfool import (
    CRITERION_MET,
    MAX_ITERATIONS,
    AttackOutcome,
    AttackState,
    run_attack,
    run_blackbox,
    run_transfool,
    should_stop,
)

__all__ = [
    "CRITERION_MET", "EMBEDDING_SPACES", "LM_BRIDGED", "MAX_ITERATIONS", "NMT_RAW", "AttackConfig",
    "AttackConfigError", "AttackOutcome", "AttackState", "KnnConfig", "ProjectionError",
    "ProjectionIndex", "TranslationOracle", "adv_loss", "attack_objective", "build_index",
    "fluency_loss", "project_tokens", "quality", "random_substitution", "run_attack",
    "run_blackbox", "run_knn_baseline", "run_transfool", "should_stop", "sim_loss",
    "total_objective",
]
