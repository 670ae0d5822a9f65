from __future__ import annotations

from dataclasses import asdict, dataclass, replace

LM_BRIDGED = "lm_bridged"
NMT_RAW = "nmt_raw"
EMBEDDING_SPACES = (LM_BRIDGED, NMT_RAW)
QUALITY_METRICS = ("sentence_bleu", "chrf")
RETURN_POLICIES = ("last_projection", "best_seen")


class AttackConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AttackConfig:
    """Objective weights, step size, stopping ratio and iteration budget.

    Defaults: ``alpha=20``, ``beta=1.8``,
    ``gamma=0.016``, ``lam=0.4``, ``max_iter=500``.
    """

    alpha: float = 20.0
    beta: float = 1.8
    gamma: float = 0.016
    lam: float = 0.4
    max_iter: int = 500
    embedding_space: str = LM_BRIDGED
    quality_metric: str = "sentence_bleu"
    return_policy: str = "last_projection"
    beam_size: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise AttackConfigError("alpha and beta must be non-negative")
        if not 0 < self.lam <= 1:
            raise AttackConfigError("lam must lie in (0, 1]")
        if self.max_iter < 0:
            raise AttackConfigError("max_iter must be non-negative")
        if self.gamma <= 0:
            raise AttackConfigError("gamma must be positive")
        if self.embedding_space not in EMBEDDING_SPACES:
            raise AttackConfigError(f"embedding_space must be one of {EMBEDDING_SPACES}")
        if self.quality_metric not in QUALITY_METRICS:
            raise AttackConfigError(f"quality_metric must be one of {QUALITY_METRICS}")
        if self.return_policy not in RETURN_POLICIES:
            raise AttackConfigError(f"return_policy must be one of {RETURN_POLICIES}")
        if self.beam_size < 1:
            raise AttackConfigError("beam_size must be >= 1")

    def with_(self, **changes) -> "AttackConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class KnnConfig:
    replace_fraction: float = 0.2
    neighbors: int = 10
    embedding_space: str = LM_BRIDGED
    lam: float = 0.4
    quality_metric: str = "sentence_bleu"
    beam_size: int = 4

    def __post_init__(self):
        if not 0 <= self.replace_fraction <= 1:
            raise AttackConfigError("replace_fraction must lie in [0, 1]")
        if self.neighbors < 1:
            raise AttackConfigError("neighbors must be >= 1")
        if self.embedding_space not in EMBEDDING_SPACES:
            raise AttackConfigError(f"embedding_space must be one of {EMBEDDING_SPACES}")

    def to_dict(self) -> dict:
        return asdict(self)
