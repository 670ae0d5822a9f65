"""Experiment pipelines, report files and the command-line interface."""

from .config import ATTACKERS, BLACKBOX, CROSSLINGUAL, MODES, WHITEBOX, ConfigError, ExperimentConfig
from .data import write_synthetic_data
from .pipeline import (
    Assets,
    RoundTrip,
    attack_dataset,
    attack_sentence,
    load_assets,
    round_trip_eval,
    score_sentence,
    sweep,
    sweep_csv,
    transfer_evaluate,
)
from .records import (
    RECORD_FIELDS,
    ControlResult,
    ReportError,
    SentenceRecord,
    control_asr,
    emit_report,
    load_records,
    mean_iterations,
    summarize_records,
    summary_csv,
)

__all__ = [
    "ATTACKERS", "BLACKBOX", "CROSSLINGUAL", "MODES", "RECORD_FIELDS", "WHITEBOX", "Assets",
    "ConfigError", "ControlResult", "ExperimentConfig", "ReportError", "RoundTrip", "SentenceRecord",
    "attack_dataset", "attack_sentence", "control_asr", "emit_report", "load_assets", "load_records",
    "mean_iterations", "round_trip_eval", "score_sentence", "summarize_records", "summary_csv",
    "sweep", "sweep_csv", "transfer_evaluate", "write_synthetic_data",
]
