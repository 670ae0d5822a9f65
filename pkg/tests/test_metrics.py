import math
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpal.metrics import (
    MetricError,
    SentenceScores,
    bleu_corpus,
    bleu_sentence,
    chrf,
    levenshtein,
    ngram_stats,
    perplexity,
    semantic_similarity,
    summarize,
    token_error_rate,
)
from gpal.textcore import generate_corpus, make_task

tokens = st.lists(st.sampled_from(list("abcdef")), min_size=1, max_size=12)


class TestBleu:
    def test_identical_corpus_is_100(self):
        assert bleu_corpus(["a b c d e"], ["a b c d e"]) == 100.0

    def test_no_four_gram_match_is_zero(self):
        assert bleu_corpus(["a b c d x"], ["a b c y d"]) == 0.0

    def test_short_hypothesis_hand_counts(self):
        # corpus BLEU is unsmoothed: 3 tokens have no 4-gram, so p4 = 0/0 and the score is 0
        assert bleu_corpus(["the cat sat"], ["the cat sat down"]) == 0.0
        # sentence BLEU skips order 4; p1..p3 = 1, BP = exp(1 - 4/3)
        assert bleu_sentence("the cat sat", "the cat sat down") == pytest.approx(
            100 * math.exp(-1 / 3), abs=1e-9)

    def test_pooled_counts_hand_oracle(self):
        hyps = ["the cat sat on the mat", "a dog ran"]
        refs = ["the cat sat on a mat", "a dog ran home"]
        # unigrams 5/6 + 3/3, bigrams 3/5 + 2/2, trigrams 2/4 + 1/1, 4-grams 1/3 + 0/0
        p = [8 / 9, 5 / 7, 3 / 5, 1 / 3]
        bp = math.exp(1 - 10 / 9)
        expected = 100 * bp * math.exp(sum(math.log(x) for x in p) / 4)
        assert bleu_corpus(hyps, refs) == pytest.approx(expected, abs=1e-9)

    def test_sentence_smoothing_hand_oracle(self):
        # p1 4/5, p2 2/4, p3 1/3, p4 0/2 -> 0.1/2 ; BP exp(1 - 6/5)
        expected = 100 * math.exp(-0.2) * (4 / 5 * 2 / 4 * 1 / 3 * 0.05) ** 0.25
        assert bleu_sentence("a b c d e", "a b c x e f") == pytest.approx(expected, abs=1e-9)

    def test_disjoint_ten_tokens(self):
        hyp = " ".join(f"h{i}" for i in range(10))
        ref = " ".join(f"r{i}" for i in range(10))
        expected = 100 * (0.1 / 10 * 0.1 / 9 * 0.1 / 8 * 0.1 / 7) ** 0.25
        assert bleu_sentence(hyp, ref) == pytest.approx(expected, abs=1e-9)
        assert bleu_sentence(hyp, ref) > 0

    def test_identical_three_tokens(self):
        assert bleu_sentence("x y z", "x y z") == pytest.approx(100.0, abs=1e-12)

    def test_no_smoothing_when_all_orders_match(self):
        h, r = "a b c d e f", "a b c d e g"
        assert bleu_sentence(h, r) == pytest.approx(bleu_corpus([h], [r]), abs=1e-12)

    def test_errors(self):
        with pytest.raises(MetricError):
            bleu_corpus([], [])
        with pytest.raises(MetricError):
            bleu_corpus(["a"], ["a", "b"])
        with pytest.raises(MetricError):
            bleu_sentence([], ["a"])

    def test_case_sensitive(self):
        assert bleu_sentence("A b c d", "a b c d") < 100

    @settings(max_examples=100, deadline=None)
    @given(tokens, tokens, st.data())
    def test_removing_shared_token_never_raises_unigram_matches(self, hyp, ref, data):
        # higher orders can rise: "a b a c" vs "a b c" gains "b c" when the second "a" goes
        shared = [i for i, t in enumerate(hyp) if t in ref]
        if not shared:
            return
        i = data.draw(st.sampled_from(shared))
        before, _ = ngram_stats(hyp, ref)
        after, _ = ngram_stats(hyp[:i] + hyp[i + 1:], ref)
        assert after[0] <= before[0]

    @settings(max_examples=100, deadline=None)
    @given(tokens, tokens)
    def test_sentence_bleu_in_range(self, hyp, ref):
        assert 0 < bleu_sentence(hyp, ref) <= 100 + 1e-9


class TestChrf:
    def test_identity(self):
        assert chrf("the cat", "the cat") == pytest.approx(100.0, abs=1e-12)

    def test_disjoint_characters(self):
        assert chrf("abc", "xyz") == 0.0

    def test_hand_enumerated(self):
        # orders 1..4 occur; P = R = (3/4 + 2/3 + 1/2 + 0) / 4 ; orders 5, 6 absent on both sides
        p = (3 / 4 + 2 / 3 + 1 / 2 + 0) / 4
        assert chrf("abcd", "abce") == pytest.approx(100 * p, abs=1e-9)

    def test_asymmetric_lengths(self):
        # hyp "ab", ref "abc": order1 P 2/2 R 2/3, order2 P 1/1 R 1/2, order3 P 0 (no candidates) R 0/1
        p = (1 + 1 + 0) / 3
        r = (2 / 3 + 1 / 2 + 0) / 3
        expected = 100 * 5 * p * r / (4 * p + r)
        assert chrf("ab", "abc") == pytest.approx(expected, abs=1e-9)

    def test_whitespace_ignored(self):
        assert chrf("a bc", "abc") == pytest.approx(100.0, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.text("abcde ", min_size=1, max_size=20), st.text("abcde ", min_size=1, max_size=20))
    def test_range(self, h, r):
        assert 0.0 <= chrf(h, r) <= 100.0 + 1e-9


def _lev_oracle(a, b):
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))
    return d(len(a), len(b))


class TestTer:
    def test_identity(self):
        assert token_error_rate([4, 5, 6], [4, 5, 6]) == 0.0

    def test_one_substitution_in_ten(self):
        orig = list(range(10))
        adv = orig.copy()
        adv[3] = 99
        assert token_error_rate(orig, adv) == 10.0

    def test_insertion_plus_substitution(self):
        assert token_error_rate([1, 2, 3, 4], [1, 9, 2, 3, 5]) == 50.0
        assert levenshtein([1, 2, 3, 4], [1, 9, 2, 3, 5]) == _lev_oracle((1, 2, 3, 4), (1, 9, 2, 3, 5))

    def test_empty_original_rejected(self):
        with pytest.raises(ValueError):
            token_error_rate([], [1])

    @settings(max_examples=200, deadline=None)
    @given(tokens, tokens)
    def test_matches_recursive_oracle(self, a, b):
        assert levenshtein(a, b) == _lev_oracle(tuple(a), tuple(b))

    @settings(max_examples=100, deadline=None)
    @given(tokens, tokens, tokens)
    def test_triangle_inequality(self, a, b, c):
        assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


def test_identity_on_thousand_generated_sentences():
    corpus = generate_corpus(make_task(0), 1000, "L1")
    for s in corpus.targets:
        assert bleu_sentence(s, s) == pytest.approx(100.0, abs=1e-9)
        assert chrf(s, s) == pytest.approx(100.0, abs=1e-9)
        assert token_error_rate(s.split(), s.split()) == 0.0
    assert bleu_corpus(corpus.targets, corpus.targets) == pytest.approx(100.0, abs=1e-9)


def _scores(bo, ba, co=50.0, ca=40.0, ter=10.0, sim=0.9, po=5.0, pa=7.0):
    return SentenceScores(bo, ba, co, ca, ter, sim, po, pa)


class TestSummary:
    def test_all_attacks_fail_identically(self):
        s = [_scores(60.0, 60.0, 50.0, 50.0, ter=0.0)] * 3
        t = summarize(s)
        assert (t.asr, t.rdbleu, t.ter) == (0.0, 0.0, 0.0)

    def test_half_minus_epsilon(self):
        s = [_scores(60.0, 30.0 - 1e-9), _scores(60.0, 60.0)]
        assert summarize(s).asr == 50.0
        assert not _scores(60.0, 30.0).success

    def test_matches_independent_aggregation(self):
        rng = np.random.default_rng(0)
        rows = []
        for i in range(20):
            bo = 0.0 if i % 7 == 0 else float(rng.uniform(10, 100))
            co = 0.0 if i % 9 == 0 else float(rng.uniform(10, 100))
            rows.append(_scores(bo, float(rng.uniform(0, 100)), co, float(rng.uniform(0, 100)),
                                float(rng.uniform(0, 50)), float(rng.uniform(-1, 1)),
                                float(rng.uniform(1, 30)), float(rng.uniform(1, 30))))
        queries = list(rng.integers(1, 500, size=20))
        t = summarize(rows, queries)
        # spreadsheet-style recomputation straight from the columns
        n_success = 0
        rdb_sum = rdb_n = rdc_sum = rdc_n = 0.0
        for r in rows:
            n_success += r.bleu_adv < 0.5 * r.bleu_orig
            if r.bleu_orig != 0:
                rdb_sum += (r.bleu_orig - r.bleu_adv) / r.bleu_orig
                rdb_n += 1
            if r.chrf_orig != 0:
                rdc_sum += (r.chrf_orig - r.chrf_adv) / r.chrf_orig
                rdc_n += 1
        assert t.asr == pytest.approx(100 * n_success / 20, abs=1e-9)
        assert t.rdbleu == pytest.approx(rdb_sum / rdb_n, abs=1e-9)
        assert t.rdchrf == pytest.approx(rdc_sum / rdc_n, abs=1e-9)
        assert t.sim == pytest.approx(np.mean([r.sim for r in rows]), abs=1e-9)
        assert t.perp == pytest.approx(np.mean([r.perp_adv for r in rows]), abs=1e-9)
        assert t.ter == pytest.approx(np.mean([r.ter for r in rows]), abs=1e-9)
        assert t.queries == pytest.approx(np.mean(queries), abs=1e-9)

    def test_empty_and_degenerate(self):
        with pytest.raises(MetricError):
            summarize([])
        with pytest.raises(MetricError):
            summarize([_scores(0.0, 0.0)])

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.01, 100), st.floats(0, 100))
    def test_success_implies_rdbleu_above_half(self, bo, ba):
        s = _scores(bo, ba)
        if s.success:
            assert s.rdbleu > 0.5

    def test_round_trip_dict(self):
        s = _scores(40.0, 10.0)
        d = s.to_dict()
        assert d["ratio"] == 0.25 and d["success"] is True
        assert SentenceScores.from_dict(d) == s


class TestModelScores:
    def test_similarity_identity_and_symmetry(self, tiny):
        a = tiny.nmt.vocab_src.tokenize(tiny.heldout.sources[0])
        b = tiny.nmt.vocab_src.tokenize(tiny.heldout.sources[1])
        assert semantic_similarity(a, a, tiny.nmt, tiny.bridge) == 1.0
        assert semantic_similarity(a, b, tiny.nmt, tiny.bridge) == pytest.approx(
            semantic_similarity(b, a, tiny.nmt, tiny.bridge), abs=1e-12)

    def test_one_swap_between_identical_and_fully_replaced(self, tiny):
        vs = tiny.nmt.vocab_src
        ids = next(vs.tokenize(s) for s in tiny.heldout.sources if len(s.split()) == 10)
        one = ids.copy()
        one[4] = ids[4] + 1 if ids[4] + 1 < len(vs) else 4
        full = [4 + (t - 4 + len(vs) // 2) % (len(vs) - 4) for t in ids]
        assert all(f != t for f, t in zip(full, ids))
        s_one = semantic_similarity(ids, one, tiny.nmt, tiny.bridge)
        s_full = semantic_similarity(ids, full, tiny.nmt, tiny.bridge)
        assert s_full < s_one < 1.0

    def test_empty_similarity(self, tiny):
        assert semantic_similarity([], [], tiny.nmt, tiny.bridge) == 1.0
        assert semantic_similarity([5], [], tiny.nmt, tiny.bridge) == 0.0

    def test_perplexity_of_single_token(self, tiny):
        from gpal.diffcore import Tensor, no_grad
        from gpal.models import lm_nll
        with no_grad():
            v = tiny.bridge(Tensor(tiny.nmt.src_embeddings[[2]]))
            nll = float(lm_nll(tiny.lm, tiny.bridge, v, [2]).data)
        assert perplexity(tiny.lm, tiny.bridge, tiny.nmt, [2]) == pytest.approx(math.exp(nll))

    def test_training_sentence_beats_its_shuffle(self, tiny):
        vs = tiny.nmt.vocab_src
        rng = np.random.default_rng(0)
        wins = 0
        for s in tiny.train.sources[:50]:
            ids = vs.encode(s)
            body = ids[:-1]
            shuffled = list(rng.permutation(body)) + ids[-1:]
            wins += perplexity(tiny.lm, tiny.bridge, tiny.nmt, ids) < perplexity(
                tiny.lm, tiny.bridge, tiny.nmt, shuffled)
        assert wins >= 45

    def test_perplexity_at_least_one(self, tiny):
        ids = tiny.nmt.vocab_src.encode(tiny.heldout.sources[3])
        assert perplexity(tiny.lm, tiny.bridge, tiny.nmt, ids) >= 1.0
