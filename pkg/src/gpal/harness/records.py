from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

from ..metrics.summary import SUMMARY_FIELDS, SentenceScores, SummaryTable, summarize

RECORD_FIELDS = ("id", "source", "adversarial", "reference", "original_translation",
                 "adversarial_translation", "scores", "iterations", "queries", "termination",
                 "control", "error")
CONTROL_FIELDS = ("adversarial", "translation", "changes", "bleu_adv", "success")


class ReportError(ValueError):
    pass


@dataclass(frozen=True)
class ControlResult:
    """Random substitution with as many changed tokens as the attack made."""

    adversarial: str
    translation: str
    changes: int
    bleu_adv: float
    success: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in CONTROL_FIELDS}


@dataclass(frozen=True)
class SentenceRecord:
    id: int
    source: str
    adversarial: str
    reference: str
    original_translation: str
    adversarial_translation: str
    scores: SentenceScores | None
    iterations: int
    queries: int
    termination: str
    control: ControlResult | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.scores is not None

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in RECORD_FIELDS}
        d["scores"] = self.scores.to_dict() if self.scores is not None else None
        d["control"] = self.control.to_dict() if self.control is not None else None
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "SentenceRecord":
        scores = SentenceScores.from_dict(d["scores"]) if d.get("scores") is not None else None
        control = d.get("control")
        control = ControlResult(**{k: control[k] for k in CONTROL_FIELDS}) if control else None
        return cls(**{k: d[k] for k in RECORD_FIELDS if k not in ("scores", "control")},
                   scores=scores, control=control)


def summarize_records(records) -> SummaryTable:
    good = [r for r in records if r.ok]
    if not good:
        raise ReportError("no successfully scored records")
    return summarize([r.scores for r in good], [r.queries for r in good])


def control_asr(records) -> float:
    good = [r for r in records if r.ok and r.control is not None]
    if not good:
        return 0.0
    return 100.0 * sum(r.control.success for r in good) / len(good)


def summary_csv(rows) -> str:
    """CSV text with the fixed summary header; floats via ``repr`` for exact replay."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_FIELDS)
    for row in rows:
        w.writerow([repr(float(row[f])) for f in SUMMARY_FIELDS])
    return buf.getvalue()


def emit_report(records, summary: SummaryTable, outdir, config: dict | None = None,
                extra: dict | None = None) -> Path:
    """Write records.jsonl, summary.csv, control.json and config.json under ``outdir``."""
    records = sorted(records, key=lambda r: r.id)
    if not records:
        raise ReportError("nothing to report: empty record list")
    out = write_records(records, outdir)
    (out / "summary.csv").write_text(summary_csv([summary.as_row()]), encoding="utf-8")
    ctrl = {"control_asr": control_asr(records), "attack_asr": summary.asr,
            "mean_iterations": mean_iterations(records)}
    if extra:
        ctrl.update(extra)
    (out / "control.json").write_text(json.dumps(ctrl, indent=2) + "\n", encoding="utf-8")
    if config is not None:
        (out / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")
    return out


def write_records(records, outdir) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "records.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for r in sorted(records, key=lambda r: r.id):
            fh.write(r.to_json() + "\n")
    return out


def mean_iterations(records) -> float:
    good = [r.iterations for r in records if r.ok]
    return sum(good) / len(good) if good else 0.0


def load_records(path) -> list[SentenceRecord]:
    path = Path(path)
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(SentenceRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ReportError(f"{path}:{n}: {exc}") from None
    return out
