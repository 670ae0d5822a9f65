from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..attack.config import AttackConfig, AttackConfigError, KnnConfig

WHITEBOX = "whitebox"
BLACKBOX = "blackbox"
CROSSLINGUAL = "crosslingual"
MODES = (WHITEBOX, BLACKBOX, CROSSLINGUAL)
ATTACKERS = ("transfool", "knn")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one batch run needs.

    ``corpus`` is the held-out TSV whose references are in the attacked
    (gradient) model's target language.  ``target_corpus`` supplies the
    target model's references in cross-lingual mode; its source column must
    match ``corpus`` line for line.
    """

    corpus: str
    nmt: str
    lm: str
    mode: str = WHITEBOX
    target_nmt: str | None = None
    target_corpus: str | None = None
    attack: AttackConfig = field(default_factory=AttackConfig)
    knn: KnnConfig = field(default_factory=KnnConfig)
    attacker: str = "transfool"
    n_sentences: int = 200
    seed: int = 0
    out: str = "out"
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.attacker not in ATTACKERS:
            raise ConfigError(f"attacker must be one of {ATTACKERS}, got {self.attacker!r}")
        if self.mode != WHITEBOX and not self.target_nmt:
            raise ConfigError(f"mode {self.mode} needs target_nmt")
        if self.mode == CROSSLINGUAL and not self.target_corpus:
            raise ConfigError("crosslingual mode needs target_corpus")
        if self.mode != WHITEBOX and self.attacker != "transfool":
            raise ConfigError("transfer modes support the transfool attacker only")
        if self.n_sentences < 1:
            raise ConfigError("n_sentences must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def paths(self) -> dict[str, str]:
        named = {"corpus": self.corpus, "nmt": self.nmt, "lm": self.lm,
                 "target_nmt": self.target_nmt, "target_corpus": self.target_corpus}
        return {k: v for k, v in named.items() if v}

    def check_files(self) -> None:
        missing = [f"{k}={v}" for k, v in self.paths().items() if not Path(v).is_file()]
        if missing:
            raise ConfigError("missing files: " + ", ".join(missing))

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def with_attack(self, **changes) -> "ExperimentConfig":
        try:
            return replace(self, attack=self.attack.with_(**changes))
        except AttackConfigError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["attack"] = self.attack.to_dict()
        d["knn"] = self.knn.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            d["attack"] = AttackConfig(**d.get("attack", {}))
            d["knn"] = KnnConfig(**d.get("knn", {}))
            return cls(**d)
        except (TypeError, AttackConfigError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(raw)
