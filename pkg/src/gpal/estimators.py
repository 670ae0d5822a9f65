"""scikit-learn style wrappers around the translation model, the LM and the attack."""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin

from .attack.config import AttackConfig
from .attack.oracle import TranslationOracle
from .attack.projection import build_index
from .attack.transfool import run_transfool
from .metrics.bleu import bleu_corpus
from .models.decoding import translate
from .models.layers import TransformerConfig
from .models.training import corpus_perplexity, train_lm_and_bridge, train_nmt
from .textcore.corpus import Corpus, SentencePair, strip_eos
from .validation import check_fitted, check_in_vocabulary, check_parallel, check_texts


class NmtTranslator(BaseEstimator):
    """Source sentences in, translated sentences out."""

    def __init__(self, d_model=64, n_layers=2, n_heads=4, d_ff=256, dropout=0.1, max_len=32,
                 epochs=30, batch_size=64, lr=1e-3, stop_bleu=None, beam_size=4, random_state=0):
        self.d_model = d_model
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.d_ff = d_ff
        self.dropout = dropout
        self.max_len = max_len
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.stop_bleu = stop_bleu
        self.beam_size = beam_size
        self.random_state = random_state

    def _config(self) -> TransformerConfig:
        return TransformerConfig(self.d_model, self.n_layers, self.n_heads, self.d_ff, self.dropout,
                                 self.max_len)

    def fit(self, X, y, heldout=None):
        X, y = check_parallel(X, y)
        held = Corpus(list(zip(*check_parallel(*heldout)))) if heldout is not None else None
        self.model_, self.history_ = train_nmt(
            Corpus(list(zip(X, y))), self._config(), epochs=self.epochs, seed=self.random_state,
            heldout=held, batch_size=self.batch_size, lr=self.lr, stop_bleu=self.stop_bleu)
        return self

    @classmethod
    def from_model(cls, model, beam_size: int = 4) -> "NmtTranslator":
        c = model.config
        est = cls(c.d_model, c.n_layers, c.n_heads, c.d_ff, c.dropout, c.max_len, beam_size=beam_size)
        est.model_ = model
        return est

    def _translate_ids(self, X) -> list[list[int]]:
        check_fitted(self, ["model_"])
        X = check_texts(X)
        vs = self.model_.vocab_src
        check_in_vocabulary(X, vs)
        return [strip_eos(translate(self.model_, vs.encode(s), beam_size=self.beam_size)) for s in X]

    def predict(self, X) -> list[str]:
        vt = self.model_.vocab_tgt if hasattr(self, "model_") else None
        return [vt.detokenize(h) for h in self._translate_ids(X)]

    def score(self, X, y) -> float:
        """Corpus BLEU of the beam translations."""
        X, y = check_parallel(X, y)
        hyps = self._translate_ids(X)
        vt = self.model_.vocab_tgt
        return bleu_corpus(hyps, [strip_eos(vt.encode(t)) for t in y])


class BridgedLanguageModel(BaseEstimator):
    """Causal LM over NMT source embeddings mapped through a learned bridge."""

    def __init__(self, translator=None, d_model=64, n_layers=2, n_heads=4, d_ff=256, dropout=0.1,
                 max_len=32, epochs=5, random_state=0):
        self.translator = translator
        self.d_model = d_model
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.d_ff = d_ff
        self.dropout = dropout
        self.max_len = max_len
        self.epochs = epochs
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_texts(X)
        if self.translator is None:
            raise ValueError("a fitted NmtTranslator is required")
        check_fitted(self.translator, ["model_"])
        config = TransformerConfig(self.d_model, self.n_layers, self.n_heads, self.d_ff, self.dropout,
                                   self.max_len)
        self.lm_, self.bridge_, self.history_ = train_lm_and_bridge(
            X, self.translator.model_, config, epochs=self.epochs, seed=self.random_state)
        return self

    @classmethod
    def from_model(cls, translator: NmtTranslator, lm, bridge) -> "BridgedLanguageModel":
        est = cls(translator)
        est.lm_, est.bridge_ = lm, bridge
        return est

    def perplexity(self, X) -> float:
        check_fitted(self, ["lm_", "bridge_"])
        X = check_texts(X)
        check_in_vocabulary(X, self.lm_.vocab)
        return corpus_perplexity(self.lm_, self.bridge_, self.translator.model_.src_embeddings, X)

    def score(self, X, y=None) -> float:
        """Negative perplexity (greater is better)."""
        return -self.perplexity(X)


class TransFool(TransformerMixin, BaseEstimator):
    """``transform`` maps source sentences to adversarial source sentences."""

    def __init__(self, translator=None, language_model=None, alpha=20.0, beta=1.8, gamma=0.016,
                 lam=0.4, max_iter=500, embedding_space="lm_bridged", quality_metric="sentence_bleu",
                 return_policy="last_projection", beam_size=4):
        self.translator = translator
        self.language_model = language_model
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.lam = lam
        self.max_iter = max_iter
        self.embedding_space = embedding_space
        self.quality_metric = quality_metric
        self.return_policy = return_policy
        self.beam_size = beam_size

    def fit(self, X=None, y=None):
        """Validate settings and models; no parameters are learned."""
        if self.translator is None or self.language_model is None:
            raise ValueError("translator and language_model are required")
        check_fitted(self.translator, ["model_"])
        check_fitted(self.language_model, ["lm_", "bridge_"])
        self.config_ = AttackConfig(self.alpha, self.beta, self.gamma, self.lam, self.max_iter,
                                    self.embedding_space, self.quality_metric, self.return_policy,
                                    self.beam_size)
        nmt = self.translator.model_
        self.index_ = build_index(nmt.src_embeddings, self.language_model.bridge_, self.embedding_space)
        return self

    def transform(self, X, y=None) -> list[str]:
        """Attack each sentence; ``y`` are references (default: the model's own translations)."""
        check_fitted(self, ["config_", "index_"])
        nmt = self.translator.model_
        X = check_texts(X)
        check_in_vocabulary(X, nmt.vocab_src)
        y = check_parallel(X, y)[1] if y is not None else self.translator.predict(X)
        lm, bridge = self.language_model.lm_, self.language_model.bridge_
        self.outcomes_ = []
        for s, t in zip(X, y):
            pair = SentencePair.encode(s, t, nmt.vocab_src, nmt.vocab_tgt)
            oracle = TranslationOracle(nmt, self.beam_size)
            self.outcomes_.append(run_transfool(self.config_, nmt, lm, bridge, pair, oracle, self.index_))
        return [nmt.vocab_src.detokenize(o.adversarial) for o in self.outcomes_]
