"""Batch attack runs, transfer evaluation, round-trip analysis and sweeps."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..attack.control import random_substitution
from ..attack.knn import run_knn_baseline
from ..attack.oracle import TranslationOracle, quality
from ..attack.projection import ProjectionIndex, build_index
from ..attack.transfool import run_attack
from ..metrics.bleu import MetricError
from ..metrics.semantic import perplexity, semantic_similarity
from ..metrics.summary import SUCCESS_FRACTION, SUMMARY_FIELDS, SentenceScores, SummaryTable
from ..metrics.ter import token_error_rate
from ..models.checkpoint import KIND_LM, KIND_NMT, load_checkpoint, read_header
from ..models.decoding import translate
from ..models.lm import CausalLm, EmbeddingBridge
from ..models.nmt import NmtModel
from ..models.training import freeze
from ..textcore.corpus import SentencePair, load_tsv, strip_eos
from ..textcore.vocab import EOS, Vocabulary
from .config import CROSSLINGUAL, WHITEBOX, ConfigError, ExperimentConfig
from .records import (ControlResult, ReportError, SentenceRecord, control_asr, emit_report,
                      mean_iterations, summarize_records, write_records)

log = logging.getLogger(__name__)

SWEEP_PARAMETERS = {"alpha": "alpha", "beta": "beta", "gamma": "gamma", "lambda": "lam",
                    "lam": "lam", "beam": "beam_size"}


@dataclass
class Assets:
    """Loaded models and encoded sentences for one configuration."""

    nmt: NmtModel
    lm: CausalLm
    bridge: EmbeddingBridge
    pairs: list[SentencePair]
    target: NmtModel | None = None
    target_references: list[tuple[int, ...]] | None = None
    target_reference_texts: list[str] | None = None
    _indexes: dict[str, ProjectionIndex] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        freeze(self.nmt, self.lm, self.bridge, self.target)

    @property
    def oracle_model(self) -> NmtModel:
        return self.target if self.target is not None else self.nmt

    def oracle_reference(self, i: int) -> tuple[int, ...]:
        return self.target_references[i] if self.target_references is not None else self.pairs[i].reference

    def oracle_reference_text(self, i: int) -> str:
        if self.target_reference_texts is not None:
            return self.target_reference_texts[i]
        return self.pairs[i].reference_text

    def index(self, space: str) -> ProjectionIndex:
        if space not in self._indexes:
            self._indexes[space] = build_index(self.nmt.src_embeddings, self.bridge, space)
        return self._indexes[space]


def _load(path, kind: str):
    header, _ = read_header(path)
    if header.get("kind") != kind:
        raise ConfigError(f"{path}: expected a {kind} checkpoint, found {header.get('kind')!r}")
    return load_checkpoint(path)


def encode_pairs(pairs, vocab_src: Vocabulary, vocab_tgt: Vocabulary) -> list[SentencePair]:
    return [SentencePair.encode(s, t, vocab_src, vocab_tgt) for s, t in pairs]


def load_assets(cfg: ExperimentConfig) -> Assets:
    cfg.check_files()
    nmt = _load(cfg.nmt, KIND_NMT)
    lm, bridge = _load(cfg.lm, KIND_LM)
    if lm.vocab != nmt.vocab_src:
        raise ConfigError("language model vocabulary differs from the NMT source vocabulary")
    corpus = load_tsv(cfg.corpus)
    raw = corpus.pairs[: cfg.n_sentences]
    pairs = encode_pairs(raw, nmt.vocab_src, nmt.vocab_tgt)
    if cfg.mode == WHITEBOX:
        return Assets(nmt, lm, bridge, pairs)
    target = _load(cfg.target_nmt, KIND_NMT)
    if target.vocab_src != nmt.vocab_src:
        raise ConfigError("reference and target models must share the source vocabulary")
    if cfg.mode == CROSSLINGUAL:
        other = load_tsv(cfg.target_corpus).pairs[: cfg.n_sentences]
        if [s for s, _ in other] != [s for s, _ in raw]:
            raise ConfigError("target_corpus sources do not match corpus sources line for line")
        texts = [t for _, t in other]
    else:
        texts = [t for _, t in raw]
    refs = [tuple(target.vocab_tgt.encode(t)) for t in texts]
    return Assets(nmt, lm, bridge, pairs, target, refs, texts)


def score_sentence(assets: Assets, source, adversarial, original_translation, adversarial_translation,
                   reference) -> SentenceScores:
    vt = assets.oracle_model.vocab_tgt
    src, adv = strip_eos(source), strip_eos(adversarial)
    return SentenceScores(
        bleu_orig=quality("sentence_bleu", original_translation, reference, vt),
        bleu_adv=quality("sentence_bleu", adversarial_translation, reference, vt),
        chrf_orig=quality("chrf", original_translation, reference, vt),
        chrf_adv=quality("chrf", adversarial_translation, reference, vt),
        ter=token_error_rate(src, adv),
        sim=semantic_similarity(src, adv, assets.nmt, assets.bridge),
        perp_orig=perplexity(assets.lm, assets.bridge, assets.nmt, list(source)),
        perp_adv=perplexity(assets.lm, assets.bridge, assets.nmt, list(adversarial)),
    )


def run_control(assets: Assets, oracle, source, adversarial, original_translation, bleu_orig: float,
                reference, seed: int) -> ControlResult:
    """Random substitution at the attack's number of changed tokens."""
    changes = sum(a != b for a, b in zip(source, adversarial))
    rng = np.random.default_rng(seed)
    ctrl = random_substitution(source, changes, len(assets.nmt.vocab_src), rng)
    if ctrl == list(source):
        translation, bleu_adv = original_translation, bleu_orig
    else:
        translation = oracle(ctrl)
        bleu_adv = quality("sentence_bleu", translation, reference, oracle.vocab_tgt)
    vs, vt = assets.nmt.vocab_src, oracle.vocab_tgt
    return ControlResult(adversarial=vs.detokenize(ctrl), translation=vt.detokenize(translation),
                         changes=changes, bleu_adv=bleu_adv,
                         success=bleu_adv < SUCCESS_FRACTION * bleu_orig)


def attack_sentence(cfg: ExperimentConfig, assets: Assets, i: int) -> SentenceRecord:
    pair = assets.pairs[i]
    ref = assets.oracle_reference(i)
    ref_text = assets.oracle_reference_text(i)
    beam = cfg.attack.beam_size if cfg.attacker == "transfool" else cfg.knn.beam_size
    oracle = TranslationOracle(assets.oracle_model, beam)
    vs, vt = assets.nmt.vocab_src, oracle.vocab_tgt
    try:
        original = oracle(pair.source)
        if cfg.attacker == "transfool":
            outcome = run_attack(cfg.attack, assets.nmt, oracle, assets.lm, assets.bridge, pair.source,
                                 pair.reference, ref, index=assets.index(cfg.attack.embedding_space),
                                 original_translation=original)
        else:
            outcome = run_knn_baseline(cfg.knn, assets.nmt, assets.lm, assets.bridge, pair, oracle,
                                       original_translation=original)
        scores = score_sentence(assets, pair.source, outcome.adversarial, original,
                                outcome.adversarial_translation, ref)
        control = run_control(assets, oracle, list(pair.source), outcome.adversarial, original,
                              scores.bleu_orig, ref, cfg.seed ^ i)
        return SentenceRecord(
            id=i, source=pair.source_text, adversarial=vs.detokenize(outcome.adversarial),
            reference=ref_text, original_translation=vt.detokenize(original),
            adversarial_translation=vt.detokenize(outcome.adversarial_translation), scores=scores,
            iterations=outcome.iterations, queries=outcome.queries, termination=outcome.termination,
            control=control)
    except Exception as exc:  # recorded per sentence, the batch carries on
        log.warning("sentence %d failed: %s", i, exc)
        return SentenceRecord(id=i, source=pair.source_text, adversarial="", reference=ref_text,
                              original_translation="", adversarial_translation="", scores=None,
                              iterations=0, queries=0, termination="error",
                              error=f"{type(exc).__name__}: {exc}")


_WORKER: tuple | None = None


def _init_worker(cfg, assets):
    global _WORKER
    _WORKER = (cfg, assets)


def _work(i: int) -> SentenceRecord:
    cfg, assets = _WORKER
    return attack_sentence(cfg, assets, i)


def run_records(cfg: ExperimentConfig, assets: Assets) -> list[SentenceRecord]:
    ids = range(len(assets.pairs))
    if cfg.workers == 1:
        records = []
        for i in ids:
            records.append(attack_sentence(cfg, assets, i))
            if (i + 1) % 25 == 0:
                log.info("attacked %d/%d sentences", i + 1, len(assets.pairs))
    else:
        with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(cfg, assets)) as pool:
            records = list(pool.map(_work, ids, chunksize=4))
    return sorted(records, key=lambda r: r.id)


def attack_dataset(cfg: ExperimentConfig, assets: Assets | None = None, write: bool = True):
    """Attack every configured sentence; returns ``(records, summary)``."""
    assets = assets or load_assets(cfg)
    records = run_records(cfg, assets)
    try:
        summary = summarize_records(records)
    except (MetricError, ReportError):
        if write:
            write_records(records, cfg.out)
        raise
    if write:
        emit_report(records, summary, cfg.out, cfg.to_dict())
    return records, summary


def transfer_evaluate(cfg: ExperimentConfig, assets: Assets | None = None, write: bool = True):
    """Black-box or cross-lingual run: gradients from ``nmt``, queries to ``target_nmt``."""
    if cfg.mode == WHITEBOX:
        raise ConfigError("transfer_evaluate needs mode blackbox or crosslingual")
    return attack_dataset(cfg, assets, write)


@dataclass(frozen=True)
class RoundTrip:
    source_sim: list[float]
    target_sim: list[float]
    orig_round_trip: list[float]
    adv_round_trip: list[float]

    def means(self) -> dict[str, float]:
        return {k: float(np.mean(getattr(self, k))) if getattr(self, k) else 0.0
                for k in ("source_sim", "target_sim", "orig_round_trip", "adv_round_trip")}


def _recode(ids, from_vocab: Vocabulary, to_vocab: Vocabulary) -> list[int]:
    text = from_vocab.detokenize(ids)
    return strip_eos(to_vocab.encode(text)) if text else []


def round_trip_eval(forward: NmtModel, backward: NmtModel, records, source_bridge: EmbeddingBridge,
                    target_bridge: EmbeddingBridge, beam_size: int = 4,
                    successful_only: bool = False) -> RoundTrip:
    """Similarities of the original and adversarial sentences with their back-translations.

    ``source_bridge`` maps ``forward``'s source table, ``target_bridge``
    maps ``backward``'s source table (the forward model's target language).
    """
    vs = forward.vocab_src
    out = {"source_sim": [], "target_sim": [], "orig_round_trip": [], "adv_round_trip": []}
    for r in records:
        if not r.ok or (successful_only and not r.scores.success):
            continue
        orig = strip_eos(vs.encode(r.source))
        adv = strip_eos(vs.encode(r.adversarial))
        tr = {}
        for name, ids in (("orig", orig), ("adv", adv)):
            hyp = strip_eos(translate(forward, ids + [EOS], beam_size=beam_size))
            # a translation that never emitted eos fills max_len; leave room for the eos we append
            mid = _recode(hyp, forward.vocab_tgt, backward.vocab_src)[: backward.config.max_len - 1]
            back = translate(backward, mid + [EOS], beam_size=beam_size) if mid else []
            back = _recode(strip_eos(back), backward.vocab_tgt, vs)
            tr[name] = mid
            out[f"{name}_round_trip"].append(semantic_similarity(ids, back, forward, source_bridge))
        out["source_sim"].append(semantic_similarity(orig, adv, forward, source_bridge))
        out["target_sim"].append(semantic_similarity(tr["orig"], tr["adv"], backward, target_bridge))
    return RoundTrip(**out)


def _point_config(cfg: ExperimentConfig, parameter: str, value) -> ExperimentConfig:
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {parameter!r}; one of {sorted(SWEEP_PARAMETERS)}")
    name = SWEEP_PARAMETERS[parameter]
    value = int(value) if name == "beam_size" else float(value)
    return cfg.with_attack(**{name: value})


SWEEP_FIELDS = ("parameter", "value") + SUMMARY_FIELDS + ("mean_iterations", "control_asr")


def sweep(cfg: ExperimentConfig, parameter: str, grid, assets: Assets | None = None,
          write: bool = True) -> list[tuple[float, SummaryTable, dict]]:
    """One batch run per grid value with everything else fixed."""
    grid = list(grid)
    if not grid:
        raise ConfigError("sweep grid is empty")
    assets = assets or load_assets(cfg)
    rows = []
    for value in grid:
        point = _point_config(cfg, parameter, value)
        point = point.with_(out=str(Path(cfg.out) / f"{parameter}={value}"))
        records, summary = attack_dataset(point, assets, write)
        extra = {"mean_iterations": mean_iterations(records), "control_asr": control_asr(records)}
        rows.append((value, summary, extra))
    if write:
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        (Path(cfg.out) / "sweep.csv").write_text(sweep_csv(parameter, rows), encoding="utf-8")
    return rows


def sweep_csv(parameter: str, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_FIELDS)
    for value, summary, extra in rows:
        row = summary.as_row() | extra
        w.writerow([parameter, repr(value)] + [repr(float(row[f])) for f in SWEEP_FIELDS[2:]])
    return buf.getvalue()
