"""scikit-learn style wrappers around the splitter and the summarizer."""

from __future__ import annotations

from dataclasses import fields

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .frontend import parse_source
from .metrics import bleu_cn
from .preprocess import make_example
from .splitter import SplitResult, split
from .train import RunConfig, build_vocabularies, encode_all, generate, train
from .utils.validation import check_ids, check_sources, check_summaries

_PATH_FIELDS = {"train_path", "valid_path", "data_dir", "out_dir"}


class AstSplitter(TransformerMixin, BaseEstimator):
    """Java method source -> ``SplitResult``. Stateless, so ``fit`` only validates."""

    def fit(self, X, y=None):
        check_sources(X)
        self.n_features_in_ = 1
        return self

    def transform(self, X) -> list[SplitResult]:
        return [split(parse_source(src)) for src in check_sources(X)]


class CastSummarizer(BaseEstimator):
    """Train on Java methods and their summaries; predict summaries for new methods.

    ``y`` may be omitted (or contain ``None``) when each method carries its
    own Javadoc comment. Constructor arguments mirror ``RunConfig``.
    """

    def __init__(
        self,
        seed=0,
        ast_cap=10_000,
        code_cap=30_000,
        summary_cap=50_000,
        d_model=128,
        n_heads=4,
        enc_layers=2,
        dec_layers=2,
        d_ff=512,
        k_clip=16,
        dropout=0.1,
        lr=1e-4,
        weight_decay=0.01,
        beta1=0.9,
        beta2=0.999,
        batch_size=32,
        max_epochs=200,
        patience=20,
        no_aggregation=False,
        no_copy=False,
        decode="greedy",
        beam_width=4,
        length_penalty=1.0,
        valid_bleu=False,
    ):
        self.seed = seed
        self.ast_cap = ast_cap
        self.code_cap = code_cap
        self.summary_cap = summary_cap
        self.d_model = d_model
        self.n_heads = n_heads
        self.enc_layers = enc_layers
        self.dec_layers = dec_layers
        self.d_ff = d_ff
        self.k_clip = k_clip
        self.dropout = dropout
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.no_aggregation = no_aggregation
        self.no_copy = no_copy
        self.decode = decode
        self.beam_width = beam_width
        self.length_penalty = length_penalty
        self.valid_bleu = valid_bleu

    def run_config(self) -> RunConfig:
        names = {f.name for f in fields(RunConfig)} - _PATH_FIELDS
        return RunConfig(**{k: v for k, v in self.get_params().items() if k in names})

    def _examples(self, X, y=None, ids=None, require_summary=True):
        sources = check_sources(X)
        summaries = check_summaries(y, len(sources))
        ids = check_ids(ids, len(sources))
        return [
            make_example(i, src, s, require_summary=require_summary) for i, src, s in zip(ids, sources, summaries)
        ]

    def fit(self, X, y=None, X_valid=None, y_valid=None):
        config = self.run_config()
        examples = self._examples(X, y)
        vocabs = build_vocabularies(
            examples, {"ast": config.ast_cap, "code": config.code_cap, "summary": config.summary_cap}
        )
        valid = encode_all(self._examples(X_valid, y_valid), vocabs) if X_valid is not None else None
        result = train(config, encode_all(examples, vocabs), vocabs, valid)
        self.model_ = result.model
        self.vocabs_ = vocabs
        self.history_ = result.history
        self.best_epoch_ = result.best_epoch
        self.n_features_in_ = 1
        return self

    def decode_outputs(self, X):
        check_is_fitted(self, "model_")
        data = encode_all(self._examples(X, require_summary=False), self.vocabs_)
        return generate(
            self.model_,
            data,
            self.vocabs_["summary"],
            mode=self.decode,
            batch_size=self.batch_size,
            beam_width=self.beam_width,
            length_penalty=self.length_penalty,
        )

    def predict(self, X) -> list[str]:
        return [" ".join(out.tokens) for out in self.decode_outputs(X)]

    def score(self, X, y=None) -> float:
        """Corpus BLEU-CN in [0, 1] against ``y`` (or the Javadoc summaries)."""
        refs = [e.summary_tokens for e in self._examples(X, y)]
        return bleu_cn([(h.split(), r) for h, r in zip(self.predict(X), refs)])
