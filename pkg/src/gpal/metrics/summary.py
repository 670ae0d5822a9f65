from __future__ import annotations

from collections.abc import Sequence
from dataclasses import asdict, dataclass

from .bleu import MetricError

SUCCESS_FRACTION = 0.5
SUMMARY_FIELDS = ("asr", "rdbleu", "rdchrf", "sim", "perp", "ter", "queries")


@dataclass(frozen=True)
class SentenceScores:
    bleu_orig: float
    bleu_adv: float
    chrf_orig: float
    chrf_adv: float
    ter: float
    sim: float
    perp_orig: float
    perp_adv: float

    @property
    def ratio(self) -> float:
        return self.bleu_adv / self.bleu_orig if self.bleu_orig > 0 else float("inf")

    @property
    def success(self) -> bool:
        return self.bleu_adv < SUCCESS_FRACTION * self.bleu_orig

    @property
    def rdbleu(self) -> float | None:
        return (self.bleu_orig - self.bleu_adv) / self.bleu_orig if self.bleu_orig > 0 else None

    @property
    def rdchrf(self) -> float | None:
        return (self.chrf_orig - self.chrf_adv) / self.chrf_orig if self.chrf_orig > 0 else None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ratio"] = self.ratio if self.bleu_orig > 0 else None
        d["success"] = self.success
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SentenceScores":
        return cls(**{k: d[k] for k in ("bleu_orig", "bleu_adv", "chrf_orig", "chrf_adv", "ter",
                                        "sim", "perp_orig", "perp_adv")})


@dataclass(frozen=True)
class SummaryTable:
    asr: float
    rdbleu: float
    rdchrf: float
    sim: float
    perp: float
    ter: float
    queries: float

    def as_row(self) -> dict:
        return {f: getattr(self, f) for f in SUMMARY_FIELDS}


def _mean(xs) -> float:
    xs = list(xs)
    return sum(xs) / len(xs) if xs else 0.0


def summarize(scores: Sequence[SentenceScores], queries: Sequence[int] | None = None) -> SummaryTable:
    """Corpus aggregates; relative decreases average over nonzero originals only."""
    if not scores:
        raise MetricError("nothing to summarize")
    rd_b = [s.rdbleu for s in scores if s.rdbleu is not None]
    rd_c = [s.rdchrf for s in scores if s.rdchrf is not None]
    if not rd_b:
        raise MetricError("every original translation scored zero BLEU (degenerate model)")
    n = len(scores)
    return SummaryTable(
        asr=100.0 * sum(s.success for s in scores) / n,
        rdbleu=_mean(rd_b),
        rdchrf=_mean(rd_c),
        sim=_mean(s.sim for s in scores),
        perp=_mean(s.perp_adv for s in scores),
        ter=_mean(s.ter for s in scores),
        queries=_mean(queries) if queries is not None else 0.0,
    )
