import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from gpal.attack import AttackConfig
from gpal.harness import cli
from gpal.harness.config import ConfigError, ExperimentConfig
from gpal.harness.pipeline import attack_dataset, load_assets, round_trip_eval, sweep
from gpal.harness.records import (RECORD_FIELDS, ReportError, SentenceRecord, emit_report,
                                  load_records, summarize_records)
from gpal.metrics import SUMMARY_FIELDS
from gpal.metrics.summary import SUCCESS_FRACTION
from gpal.models import NmtModel, TransformerConfig, save_checkpoint

QUICK = {"max_iter": 30, "alpha": 2.0}


@pytest.fixture(scope="module")
def run_cfg(tiny_files, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    return ExperimentConfig(corpus=tiny_files["corpus"], nmt=tiny_files["nmt"], lm=tiny_files["lm"],
                            attack=AttackConfig(**QUICK), n_sentences=8, out=str(out / "a"))


@pytest.fixture(scope="module")
def run(run_cfg):
    records, summary = attack_dataset(run_cfg)
    return run_cfg, records, summary


class TestConfig:
    def test_round_trip(self, run_cfg):
        assert ExperimentConfig.from_dict(run_cfg.to_dict()) == run_cfg

    def test_unknown_key(self, run_cfg):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(run_cfg.to_dict() | {"bogus": 1})

    def test_mode_needs_target(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(corpus="c", nmt="n", lm="l", mode="blackbox")
        with pytest.raises(ConfigError):
            ExperimentConfig(corpus="c", nmt="n", lm="l", mode="crosslingual", target_nmt="t")

    def test_missing_files(self, tmp_path):
        cfg = ExperimentConfig(corpus=str(tmp_path / "x.tsv"), nmt="n", lm="l")
        with pytest.raises(ConfigError, match="missing files"):
            cfg.check_files()

    def test_wrong_checkpoint_kind(self, run_cfg):
        with pytest.raises(ConfigError):
            load_assets(run_cfg.with_(lm=run_cfg.nmt))

    def test_bad_attack_value(self, run_cfg):
        with pytest.raises(ConfigError):
            run_cfg.with_attack(lam=2.0)


class TestRecords:
    def test_one_line_per_record_with_fixed_field_order(self, run):
        cfg, records, _ = run
        lines = (Path(cfg.out) / "records.jsonl").read_text(encoding="utf-8").splitlines()
        assert len(lines) == len(records) == cfg.n_sentences
        for line in lines:
            assert tuple(json.loads(line)) == RECORD_FIELDS

    def test_parse_back_equals_memory(self, run):
        cfg, records, _ = run
        assert load_records(Path(cfg.out) / "records.jsonl") == records

    def test_summary_is_pure_function_of_records(self, run):
        cfg, _, summary = run
        again = summarize_records(load_records(Path(cfg.out) / "records.jsonl"))
        rows = list(csv.DictReader(io.StringIO((Path(cfg.out) / "summary.csv").read_text())))
        assert tuple(rows[0]) == SUMMARY_FIELDS
        for f in SUMMARY_FIELDS:
            assert float(rows[0][f]) == getattr(again, f) == getattr(summary, f)

    def test_records_match_outcome_accounting(self, run):
        cfg, records, _ = run
        for r in records:
            assert r.ok
            assert r.queries <= r.iterations <= cfg.attack.max_iter
            assert r.scores.success == (r.scores.bleu_adv < SUCCESS_FRACTION * r.scores.bleu_orig)
            assert r.control.changes == sum(a != b for a, b in zip(r.source.split(), r.adversarial.split()))

    def test_config_echo(self, run):
        cfg, _, _ = run
        echoed = json.loads((Path(cfg.out) / "config.json").read_text())
        assert ExperimentConfig.from_dict(echoed) == cfg

    def test_empty_report_rejected(self, tmp_path, run):
        _, _, summary = run
        with pytest.raises(ReportError):
            emit_report([], summary, tmp_path)

    def test_error_records_survive(self):
        r = SentenceRecord(0, "a", "", "b", "", "", None, 0, 0, "error", error="ValueError: x")
        assert not r.ok
        assert SentenceRecord.from_dict(json.loads(r.to_json())) == r
        with pytest.raises(ReportError):
            summarize_records([r])


class TestPipeline:
    def test_replay_is_byte_identical(self, run, tmp_path):
        cfg, _, _ = run
        again = cfg.with_(out=str(tmp_path / "b"))
        attack_dataset(again)
        for name in ("records.jsonl", "summary.csv", "control.json"):
            assert (Path(cfg.out) / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_workers_do_not_change_output(self, run, tmp_path):
        cfg, _, _ = run
        attack_dataset(cfg.with_(out=str(tmp_path / "w"), workers=2))
        for name in ("records.jsonl", "summary.csv"):
            assert (Path(cfg.out) / name).read_bytes() == (tmp_path / "w" / name).read_bytes()

    def test_zero_iterations_asr_is_degenerate_fraction(self, run_cfg, tmp_path):
        cfg = run_cfg.with_attack(max_iter=0).with_(out=str(tmp_path / "k0"))
        records, summary = attack_dataset(cfg)
        zero = sum(r.scores.bleu_orig == 0 for r in records)
        assert summary.asr == pytest.approx(100 * zero / len(records))
        assert summary.ter == 0.0 and summary.queries == 0.0

    def test_sweep_of_one_equals_attack(self, run, tmp_path):
        cfg, _, summary = run
        point = cfg.with_(out=str(tmp_path / "s"))
        rows = sweep(point, "alpha", [cfg.attack.alpha])
        assert rows[0][1] == summary
        sub = tmp_path / "s" / f"alpha={cfg.attack.alpha}"
        assert (sub / "records.jsonl").read_bytes() == (Path(cfg.out) / "records.jsonl").read_bytes()
        header = (tmp_path / "s" / "sweep.csv").read_text().splitlines()[0]
        assert header.startswith("parameter,value,asr")

    def test_blackbox_same_model_matches_whitebox(self, run, tmp_path):
        cfg, _, _ = run
        bb = cfg.with_(mode="blackbox", target_nmt=cfg.nmt, out=str(tmp_path / "bb"))
        attack_dataset(bb)
        assert (tmp_path / "bb" / "records.jsonl").read_bytes() == (Path(cfg.out) / "records.jsonl").read_bytes()

    def test_crosslingual_source_mismatch(self, run, tmp_path):
        cfg, _, _ = run
        other = tmp_path / "other.tsv"
        other.write_text("x y\tz\n" * 8, encoding="utf-8")
        bad = cfg.with_(mode="crosslingual", target_nmt=cfg.nmt, target_corpus=str(other))
        with pytest.raises(ConfigError):
            load_assets(bad)

    def test_knn_attacker(self, run_cfg, tmp_path):
        records, _ = attack_dataset(run_cfg.with_(attacker="knn", out=str(tmp_path / "knn")))
        assert all(r.iterations == 1 and r.queries <= 1 for r in records)


class TestRoundTrip:
    def test_copy_models_round_trip_exactly(self, tiny, run, monkeypatch):
        _, records, _ = run
        import gpal.harness.pipeline as pipeline
        vs = tiny.nmt.vocab_src
        cfg = TransformerConfig(d_model=tiny.nmt.config.d_model, n_layers=1, n_heads=2, d_ff=8, max_len=16)
        forward = NmtModel(cfg, vs, vs, seed=0)
        forward.params["src_emb"] = tiny.nmt.params["src_emb"]
        backward = NmtModel(cfg, vs, vs, seed=1)
        backward.params["src_emb"] = tiny.nmt.params["src_emb"]
        monkeypatch.setattr(pipeline, "translate", lambda model, ids, beam_size=4: list(ids))
        rt = round_trip_eval(forward, backward, records, tiny.bridge, tiny.bridge)
        assert rt.orig_round_trip == [1.0] * len(records)
        assert rt.adv_round_trip == [1.0] * len(records)
        # identity translation: target-side similarity reproduces the source-side one
        np.testing.assert_allclose(rt.target_sim, rt.source_sim, atol=1e-12)

    def test_runaway_translation_is_clipped(self, tiny, run, monkeypatch):
        _, records, _ = run
        import gpal.harness.pipeline as pipeline
        limit = tiny.nmt.config.max_len
        seen = []

        def runaway(model, ids, beam_size=4):
            seen.append(len(ids))
            assert len(ids) <= limit
            return (list(ids[:-1]) * limit)[:limit]

        monkeypatch.setattr(pipeline, "translate", runaway)
        vs = tiny.nmt.vocab_src
        cfg = TransformerConfig(d_model=tiny.nmt.config.d_model, n_layers=1, n_heads=2, d_ff=8, max_len=limit)
        model = NmtModel(cfg, vs, vs, seed=0)
        rt = round_trip_eval(model, model, records[:2], tiny.bridge, tiny.bridge)
        assert len(rt.adv_round_trip) == 2 and max(seen) == limit

    def test_similarities_symmetric(self, tiny, run):
        from gpal.metrics import semantic_similarity
        _, records, _ = run
        vs = tiny.nmt.vocab_src
        for r in records:
            a, b = vs.tokenize(r.source), vs.tokenize(r.adversarial)
            assert semantic_similarity(a, b, tiny.nmt, tiny.bridge) == pytest.approx(
                semantic_similarity(b, a, tiny.nmt, tiny.bridge), abs=1e-12)


class TestCli:
    def _base(self, files, out):
        return ["--corpus", files["corpus"], "--nmt", files["nmt"], "--lm", files["lm"],
                "--n-sentences", "3", "--max-iter", "10", "--alpha", "2", "--out", str(out)]

    def test_attack_and_report(self, tiny_files, tmp_path, capsys):
        assert cli.main(["attack"] + self._base(tiny_files, tmp_path / "c")) == 0
        first = capsys.readouterr().out
        assert first.splitlines()[0] == ",".join(SUMMARY_FIELDS)
        assert cli.main(["report", "--records", str(tmp_path / "c" / "records.jsonl")]) == 0
        assert capsys.readouterr().out == first

    def test_config_file_with_flag_override(self, tiny_files, tmp_path, capsys):
        conf = tmp_path / "conf.json"
        conf.write_text(json.dumps({"corpus": tiny_files["corpus"], "nmt": tiny_files["nmt"],
                                    "lm": tiny_files["lm"], "n_sentences": 2,
                                    "attack": {"max_iter": 5, "alpha": 7.0}}))
        assert cli.main(["attack", "--config", str(conf), "--alpha", "3", "--out", str(tmp_path / "o")]) == 0
        echoed = json.loads((tmp_path / "o" / "config.json").read_text())
        assert echoed["attack"]["alpha"] == 3.0 and echoed["attack"]["max_iter"] == 5

    def test_missing_checkpoint_is_config_error(self, tiny_files, tmp_path):
        args = self._base(tiny_files, tmp_path / "m")
        args[args.index("--nmt") + 1] = str(tmp_path / "absent.ckpt")
        assert cli.main(["attack"] + args) == 1

    def test_bad_flag_value_is_config_error(self, tiny_files, tmp_path):
        with pytest.raises(SystemExit) as info:
            cli.main(["attack"] + self._base(tiny_files, tmp_path) + ["--alpha", "lots"])
        assert info.value.code == 1

    def test_invalid_lambda_is_config_error(self, tiny_files, tmp_path):
        assert cli.main(["attack"] + self._base(tiny_files, tmp_path) + ["--lambda", "3"]) == 1

    def test_runtime_failure_exit_code(self, tmp_path):
        empty = tmp_path / "empty.tsv"
        empty.write_text("", encoding="utf-8")
        assert cli.main(["train-nmt", "--corpus", str(empty), "--out", str(tmp_path / "m.ckpt")]) == 2

    def test_gen_data_and_train_commands(self, tmp_path, capsys):
        assert cli.main(["gen-data", "--out", str(tmp_path / "d"), "--n-pairs", "60", "--heldout", "10"]) == 0
        conf = tmp_path / "model.json"
        conf.write_text(json.dumps({"model": {"d_model": 8, "n_layers": 1, "n_heads": 2, "d_ff": 8,
                                              "max_len": 20}}))
        train = str(tmp_path / "d" / "L1" / "train.tsv")
        held = str(tmp_path / "d" / "L1" / "heldout.tsv")
        assert cli.main(["train-nmt", "--corpus", train, "--heldout", held, "--epochs", "1",
                         "--config", str(conf), "--out", str(tmp_path / "n.ckpt")]) == 0
        assert cli.main(["train-lm", "--corpus", train, "--nmt", str(tmp_path / "n.ckpt"), "--epochs", "1",
                         "--config", str(conf), "--heldout", held, "--out", str(tmp_path / "l.ckpt")]) == 0
        info = json.loads(capsys.readouterr().out.splitlines()[-1])
        assert info["heldout_ppl"] > 1

    def test_sweep_and_transfer_commands(self, tiny_files, tmp_path, capsys):
        base = self._base(tiny_files, tmp_path / "sw")
        assert cli.main(["sweep", "--param", "lambda", "--grid", "0.4,0.8"] + base) == 0
        out = capsys.readouterr().out.splitlines()
        assert len(out) == 3 and out[1].startswith("lambda,0.4")
        base = self._base(tiny_files, tmp_path / "tr")
        assert cli.main(["transfer", "--target-nmt", tiny_files["nmt"]] + base) == 0

    def test_roundtrip_command(self, tiny_files, run, tmp_path, capsys):
        cfg, _, _ = run
        assert cli.main(["roundtrip", "--records", str(Path(cfg.out) / "records.jsonl"),
                         "--forward", tiny_files["nmt"], "--backward", tiny_files["nmt"],
                         "--lm", tiny_files["lm"], "--target-lm", tiny_files["lm"], "--beam", "1",
                         "--out", str(tmp_path / "rt")]) == 0
        means = json.loads(capsys.readouterr().out)
        assert set(means) == {"source_sim", "target_sim", "orig_round_trip", "adv_round_trip"}

    def test_report_on_corrupt_records(self, tmp_path):
        bad = tmp_path / "records.jsonl"
        bad.write_text("{not json\n", encoding="utf-8")
        assert cli.main(["report", "--records", str(bad)]) == 1


class TestEstimators:
    def test_sklearn_api(self, tiny):
        from sklearn.base import clone

        from gpal.estimators import BridgedLanguageModel, NmtTranslator, TransFool
        tr = NmtTranslator.from_model(tiny.nmt, beam_size=1)
        lm = BridgedLanguageModel.from_model(tr, tiny.lm, tiny.bridge)
        attack = TransFool(tr, lm, max_iter=10, alpha=2.0)
        assert clone(attack).get_params()["max_iter"] == 10
        X = tiny.heldout.sources[:2]
        adv = attack.fit().transform(X)
        assert len(adv) == 2 and all(isinstance(s, str) for s in adv)
        assert len(attack.outcomes_) == 2
        assert lm.score(X) == -lm.perplexity(X) < -1
        assert 0 <= tr.score(X, tiny.heldout.targets[:2]) <= 100

    def test_unfitted_and_out_of_vocabulary(self, tiny):
        from sklearn.exceptions import NotFittedError

        from gpal.estimators import NmtTranslator
        with pytest.raises(NotFittedError):
            NmtTranslator().predict(["a b"])
        with pytest.raises(ValueError):
            NmtTranslator.from_model(tiny.nmt).predict(["zzzz qqqq"])

    def test_fit_small(self):
        from gpal.estimators import NmtTranslator
        X = ["s1 s2", "s3 s4 s5", "s2 s1"] * 5
        y = ["t2 t1", "t4 t3 t5", "t1 t2"] * 5
        est = NmtTranslator(d_model=8, n_layers=1, n_heads=2, d_ff=8, max_len=8, epochs=1, batch_size=8)
        assert est.fit(X, y) is est
        assert len(est.predict(X[:2])) == 2


def test_checkpoint_saved_in_tiny_files_loads(tiny_files):
    from gpal.models import load_checkpoint
    assert load_checkpoint(tiny_files["nmt"]).kind == "nmt"


def test_save_checkpoint_used_by_cli(tiny, tmp_path):
    p = save_checkpoint(tiny.nmt, tmp_path / "x.ckpt")
    assert p.exists()
