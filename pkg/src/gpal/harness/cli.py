"""Command-line entry point: ``gpal <subcommand> [flags]``.

Exit status 0 on success, 1 on configuration errors, 2 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..attack.config import AttackConfigError
from ..models.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from ..models.layers import TransformerConfig
from ..models.training import corpus_perplexity, train_lm_and_bridge, train_nmt, unigram_perplexity
from ..textcore.corpus import CorpusFormatError, load_tsv
from .config import ConfigError, ExperimentConfig
from .data import N_HELDOUT, N_PAIRS, write_synthetic_data
from .pipeline import (SWEEP_PARAMETERS, attack_dataset, load_assets, round_trip_eval, sweep, sweep_csv,
                       transfer_evaluate)
from .records import ReportError, emit_report, load_records, summarize_records, summary_csv

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

# flag -> AttackConfig field
ATTACK_FLAGS = {"alpha": "alpha", "beta": "beta", "gamma": "gamma", "lambda_": "lam",
                "max_iter": "max_iter", "embedding_space": "embedding_space",
                "metric": "quality_metric", "beam": "beam_size"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _json_file(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return data


def _model_config(raw: dict) -> TransformerConfig:
    try:
        return TransformerConfig(**raw.get("model", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"model config: {exc}") from None


def _experiment(args) -> ExperimentConfig:
    raw = _json_file(args.config)
    for key in ("corpus", "nmt", "lm", "mode", "target_nmt", "target_corpus", "attacker",
                "n_sentences", "seed", "out", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    attack = dict(raw.get("attack", {}))
    for flag, name in ATTACK_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            attack[name] = value
    raw["attack"] = attack
    if "beam_size" in attack:
        raw["knn"] = dict(raw.get("knn", {})) | {"beam_size": attack["beam_size"]}
    missing = [k for k in ("corpus", "nmt", "lm") if k not in raw]
    if missing:
        raise ConfigError(f"missing required settings: {missing}")
    return ExperimentConfig.from_dict(raw)


def cmd_gen_data(args) -> None:
    paths = write_synthetic_data(args.out, seed=args.seed or 0, n_pairs=args.n_pairs,
                                 n_heldout=args.heldout)
    for name, p in paths.items():
        print(f"{name}\t{p}")


def _train_options(raw: dict) -> dict:
    keys = ("epochs", "batch_size", "lr", "stop_bleu", "eval_size")
    return {k: raw[k] for k in keys if k in raw}


def cmd_train_nmt(args) -> None:
    raw = _json_file(args.config)
    opts = _train_options(raw)
    if args.epochs is not None:
        opts["epochs"] = args.epochs
    if args.stop_bleu is not None:
        opts["stop_bleu"] = args.stop_bleu
    try:
        train = load_tsv(args.corpus)
        held = load_tsv(args.heldout) if args.heldout else None
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    model, hist = train_nmt(train, _model_config(raw), seed=args.seed or 0, heldout=held, **opts)
    save_checkpoint(model, args.out, {"epochs": len(hist.epoch_loss), "heldout_bleu": hist.heldout,
                                      "seconds": hist.seconds})
    print(json.dumps({"epochs": len(hist.epoch_loss), "heldout_bleu": hist.heldout[-1:] or None,
                      "seconds": round(hist.seconds, 1)}))


def cmd_train_lm(args) -> None:
    raw = _json_file(args.config)
    try:
        train = load_tsv(args.corpus)
        held = load_tsv(args.heldout) if args.heldout else None
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    nmt = load_checkpoint(args.nmt)
    epochs = args.epochs if args.epochs is not None else raw.get("epochs", 5)
    lm, bridge, hist = train_lm_and_bridge(train.sources, nmt, _model_config(raw), epochs=epochs,
                                           seed=args.seed or 0,
                                           heldout=held.sources if held else None)
    info = {"epochs": epochs, "seconds": round(hist.seconds, 1)}
    if held is not None:
        info["heldout_ppl"] = corpus_perplexity(lm, bridge, nmt.src_embeddings, held.sources)
        info["unigram_ppl"] = unigram_perplexity(train.sources, held.sources, nmt.vocab_src)
    save_checkpoint((lm, bridge), args.out, info)
    print(json.dumps(info))


def _print_summary(summary) -> None:
    sys.stdout.write(summary_csv([summary.as_row()]))


def cmd_attack(args) -> None:
    cfg = _experiment(args)
    _, summary = attack_dataset(cfg)
    _print_summary(summary)


def cmd_transfer(args) -> None:
    cfg = _experiment(args)
    if cfg.mode == "whitebox":
        cfg = cfg.with_(mode="blackbox") if cfg.target_nmt else cfg
    _, summary = transfer_evaluate(cfg)
    _print_summary(summary)


def cmd_roundtrip(args) -> None:
    records = load_records(args.records)
    forward, backward = load_checkpoint(args.forward), load_checkpoint(args.backward)
    _, src_bridge = load_checkpoint(args.lm)
    _, tgt_bridge = load_checkpoint(args.target_lm)
    result = round_trip_eval(forward, backward, records, src_bridge, tgt_bridge,
                             beam_size=args.beam or 4)
    means = result.means()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "roundtrip.json").write_text(json.dumps({"means": means, "per_sentence": {
            k: getattr(result, k) for k in means}}, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(means))


def cmd_sweep(args) -> None:
    cfg = _experiment(args)
    try:
        grid = [float(x) for x in args.grid.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad grid {args.grid!r}") from None
    rows = sweep(cfg, args.param, grid, load_assets(cfg))
    sys.stdout.write(sweep_csv(args.param, rows))


def cmd_report(args) -> None:
    records = load_records(args.records)
    summary = summarize_records(records)
    if args.out:
        emit_report(records, summary, args.out)
    _print_summary(summary)


def _add_shared(p, attack: bool = False) -> None:
    p.add_argument("--config", help="JSON settings file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    if attack:
        p.add_argument("--corpus")
        p.add_argument("--nmt")
        p.add_argument("--lm")
        p.add_argument("--mode", choices=("whitebox", "blackbox", "crosslingual"))
        p.add_argument("--target-nmt", dest="target_nmt")
        p.add_argument("--target-corpus", dest="target_corpus")
        p.add_argument("--n-sentences", dest="n_sentences", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--lambda", dest="lambda_", type=float)
        p.add_argument("--max-iter", dest="max_iter", type=int)
        p.add_argument("--embedding-space", dest="embedding_space", choices=("lm_bridged", "nmt_raw"))
        p.add_argument("--metric", choices=("sentence_bleu", "chrf"))
        p.add_argument("--attacker", choices=("transfool", "knn"))
        p.add_argument("--beam", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gpal", description="Adversarial attacks on small translation models.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-data", help="write the synthetic parallel corpora")
    _add_shared(p)
    p.add_argument("--n-pairs", dest="n_pairs", type=int, default=N_PAIRS)
    p.add_argument("--heldout", type=int, default=N_HELDOUT)
    p.set_defaults(func=cmd_gen_data, need_out=True)

    p = sub.add_parser("train-nmt", help="train a translation model")
    _add_shared(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--heldout")
    p.add_argument("--epochs", type=int)
    p.add_argument("--stop-bleu", dest="stop_bleu", type=float)
    p.set_defaults(func=cmd_train_nmt, need_out=True)

    p = sub.add_parser("train-lm", help="train the language model and embedding bridge")
    _add_shared(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--nmt", required=True)
    p.add_argument("--heldout")
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_train_lm, need_out=True)

    for name, func, text in (("attack", cmd_attack, "white-box attack over a corpus"),
                             ("transfer", cmd_transfer, "black-box or cross-lingual transfer")):
        p = sub.add_parser(name, help=text)
        _add_shared(p, attack=True)
        p.set_defaults(func=func, need_out=False)

    p = sub.add_parser("roundtrip", help="round-trip similarity of attack records")
    _add_shared(p)
    p.add_argument("--records", required=True)
    p.add_argument("--forward", required=True)
    p.add_argument("--backward", required=True)
    p.add_argument("--lm", required=True, help="LM+bridge of the forward source side")
    p.add_argument("--target-lm", dest="target_lm", required=True,
                   help="LM+bridge of the backward model's source side")
    p.add_argument("--beam", type=int)
    p.set_defaults(func=cmd_roundtrip, need_out=False)

    p = sub.add_parser("sweep", help="one attack run per value of a hyperparameter")
    _add_shared(p, attack=True)
    p.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMETERS))
    p.add_argument("--grid", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep, need_out=False)

    p = sub.add_parser("report", help="re-aggregate a records.jsonl file")
    _add_shared(p)
    p.add_argument("--records", required=True)
    p.set_defaults(func=cmd_report, need_out=False)
    return parser


CONFIG_ERRORS = (ConfigError, AttackConfigError, CorpusFormatError, CheckpointError, ReportError,
                 FileNotFoundError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    if args.need_out and not args.out:
        parser.error(f"{args.command} requires --out")
    try:
        args.func(args)
    except CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
