"""Run configuration, dataset preparation, the training loop and checkpoint I/O."""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
import torch

from .metrics import bleu_cn
from .model import CastModel, ModelConfig, beam_search, greedy, make_batch
from .nn import AdamWConfig, CheckpointError, OptimState, adamw_step, backward, load_checkpoint, save_checkpoint
from .preprocess import EncodedExample, Example, Vocabulary, ast_label_sequences, build_vocab, encode_example

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    seed: int = 0
    ast_cap: int = 10_000
    code_cap: int = 30_000
    summary_cap: int = 50_000
    d_model: int = 128
    n_heads: int = 4
    enc_layers: int = 2
    dec_layers: int = 2
    d_ff: int = 512
    k_clip: int = 16
    dropout: float = 0.1
    lr: float = 1e-4
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 20
    no_aggregation: bool = False
    no_copy: bool = False
    decode: str = "greedy"
    beam_width: int = 4
    length_penalty: float = 1.0
    valid_bleu: bool = True
    train_path: str | None = None
    valid_path: str | None = None
    data_dir: str | None = None
    out_dir: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("d_model", "n_heads", "enc_layers", "dec_layers", "d_ff", "k_clip", "batch_size", "max_epochs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model={self.d_model} is not divisible by n_heads={self.n_heads}")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if min(self.ast_cap, self.code_cap, self.summary_cap) < 1:
            raise ValueError("vocabulary caps must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.decode not in ("greedy", "beam"):
            raise ValueError(f"decode must be 'greedy' or 'beam', got {self.decode!r}")

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides) -> RunConfig:
        """Config file values, then ``CAST_SEED``, then non-None ``overrides``."""
        values: dict = {}
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                values = json.load(fh)
            known = {f.name for f in fields(cls)}
            unknown = sorted(set(values) - known)
            if unknown:
                raise ValueError(f"{path}: unknown config keys {unknown}")
        if "seed" not in values and os.environ.get("CAST_SEED"):
            values["seed"] = int(os.environ["CAST_SEED"])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self) -> dict:
        return asdict(self)

    def model_config(self, vocabs: dict[str, Vocabulary]) -> ModelConfig:
        return ModelConfig(
            ast_vocab=len(vocabs["ast"]),
            code_vocab=len(vocabs["code"]),
            summary_vocab=len(vocabs["summary"]),
            d_model=self.d_model,
            n_heads=self.n_heads,
            enc_layers=self.enc_layers,
            dec_layers=self.dec_layers,
            d_ff=self.d_ff,
            dropout=self.dropout,
            k_clip=self.k_clip,
            use_copy=not self.no_copy,
            aggregate=not self.no_aggregation,
        )

    def adamw(self) -> AdamWConfig:
        return AdamWConfig(lr=self.lr, beta1=self.beta1, beta2=self.beta2, weight_decay=self.weight_decay)


# -- data -----------------------------------------------------------------------


def build_vocabularies(examples: list[Example], caps: dict[str, int]) -> dict[str, Vocabulary]:
    return {
        "ast": build_vocab((seq for e in examples for seq in ast_label_sequences(e)), "ast", caps["ast"]),
        "code": build_vocab((e.code_tokens for e in examples), "code", caps["code"]),
        "summary": build_vocab((e.summary_tokens for e in examples), "summary", caps["summary"]),
    }


def encode_all(examples: Iterable[Example], vocabs: dict[str, Vocabulary]) -> list[EncodedExample]:
    return [encode_example(e, vocabs["ast"], vocabs["code"]) for e in examples]


# -- checkpoints ------------------------------------------------------------------


def save_model(path: str | Path, model: CastModel, vocabs: dict[str, Vocabulary], **meta) -> None:
    save_checkpoint(
        path,
        model.named_tensors(),
        model_config=model.config.to_dict(),
        vocabs={k: v.tokens for k, v in vocabs.items()},
        **meta,
    )


def shape_diff(expected: dict[str, tuple], found: dict[str, tuple]) -> list[str]:
    lines = []
    for name in sorted(set(expected) | set(found)):
        e, f = expected.get(name), found.get(name)
        if e == f:
            continue
        lines.append(f"  {name}: expected {list(e) if e else 'absent'}, found {list(f) if f else 'absent'}")
    return lines


def load_model(path: str | Path) -> tuple[CastModel, dict[str, Vocabulary], dict]:
    """Rebuild the model recorded in a checkpoint; any tensor mismatch is an error."""
    tensors, meta = load_checkpoint(path)
    if "model_config" not in meta or "vocabs" not in meta:
        raise CheckpointError(f"{path}: checkpoint format v{meta['version']} lacks model_config/vocabs")
    config = ModelConfig(**meta["model_config"])
    vocabs = {k: Vocabulary(k, toks) for k, toks in meta["vocabs"].items()}
    model = CastModel(config)
    expected = {n: tuple(p.shape) for n, p in model.named_parameters()}
    found = {n: tuple(t.shape) for n, t in tensors.items()}
    diff = shape_diff(expected, found)
    if diff:
        raise CheckpointError(
            f"{path}: checkpoint format v{meta['version']} does not match the model it describes:\n" + "\n".join(diff)
        )
    with torch.no_grad():
        for n, p in model.named_parameters():
            p.copy_(tensors[n])
    model.eval()
    return model, vocabs, meta


def _optim_path(path: str | Path) -> Path:
    return Path(str(path) + ".optim")


def save_optimizer(path: str | Path, state: OptimState, **meta) -> None:
    tensors = {f"m.{k}": v for k, v in state.m.items()}
    tensors.update({f"v.{k}": v for k, v in state.v.items()})
    save_checkpoint(_optim_path(path), tensors, t=state.t, **meta)


def load_optimizer(path: str | Path) -> tuple[OptimState, dict]:
    tensors, meta = load_checkpoint(_optim_path(path))
    state = OptimState(t=int(meta["t"]))
    for name, t in tensors.items():
        kind, key = name.split(".", 1)
        (state.m if kind == "m" else state.v)[key] = t
    return state, meta


# -- training ---------------------------------------------------------------------


@dataclass
class TrainLogRecord:
    epoch: int
    train_loss: float
    valid_loss: float
    valid_bleu: float | None
    seconds: float
    checkpoint: str | None = None

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class TrainResult:
    model: CastModel
    vocabs: dict[str, Vocabulary]
    history: list[TrainLogRecord]
    best_epoch: int
    best_valid_loss: float
    best_path: str | None


@torch.no_grad()
def evaluate_loss(model: CastModel, data: list[EncodedExample], vocab: Vocabulary, batch_size: int) -> float:
    """Token-weighted mean NLL with dropout off."""
    was_training = model.training
    model.eval()
    total, count = 0.0, 0
    for i in range(0, len(data), batch_size):
        batch = make_batch(data[i : i + batch_size], vocab, use_copy=model.config.use_copy)
        n = int(batch.tgt_mask.sum())
        total += float(model.loss(batch)) * n
        count += n
    model.train(was_training)
    return total / max(count, 1)


@torch.no_grad()
def generate(
    model: CastModel,
    data: list[EncodedExample],
    vocab: Vocabulary,
    mode: str = "greedy",
    batch_size: int = 32,
    beam_width: int = 4,
    length_penalty: float = 1.0,
):
    """DecodeOutput per example, in input order."""
    was_training = model.training
    model.eval()
    out = []
    for i in range(0, len(data), batch_size):
        batch = make_batch(data[i : i + batch_size], vocab, use_copy=model.config.use_copy, with_targets=False)
        if mode == "beam":
            out.extend(beam_search(model, batch, vocab, width=beam_width, length_penalty=length_penalty))
        else:
            out.extend(greedy(model, batch, vocab))
    model.train(was_training)
    return out


def corpus_bleu(model, data, vocab, batch_size=32) -> float:
    hyps = generate(model, data, vocab, batch_size=batch_size)
    return bleu_cn([(h.tokens, e.summary_tokens) for h, e in zip(hyps, data)])


def check_vocab_compat(ckpt_meta: dict, vocabs: dict[str, Vocabulary]) -> None:
    found = {k: (len(Vocabulary(k, toks)),) for k, toks in ckpt_meta["vocabs"].items()}
    expected = {k: (len(v),) for k, v in vocabs.items()}
    diff = shape_diff(expected, found)
    mismatched = [k for k in vocabs if ckpt_meta["vocabs"].get(k) != vocabs[k].tokens]
    if diff or mismatched:
        lines = diff or [f"  {k}: same size, different token order" for k in mismatched]
        raise CheckpointError("vocabulary mismatch between data and checkpoint:\n" + "\n".join(lines))


def train(
    config: RunConfig,
    train_data: list[EncodedExample],
    vocabs: dict[str, Vocabulary],
    valid_data: list[EncodedExample] | None = None,
    out_dir: str | Path | None = None,
    resume: str | Path | None = None,
    on_epoch: Callable[[TrainLogRecord], None] | None = None,
) -> TrainResult:
    """Teacher-forced MLE with AdamW and early stopping on validation loss.

    Without ``valid_data`` the training set doubles as the validation set.
    With ``out_dir`` the best checkpoint goes to ``out_dir/best.ckpt`` and
    the log to ``out_dir/train_log.jsonl`` (first line: effective config).
    """
    if not train_data:
        raise ValueError("no training examples")
    valid_data = valid_data or train_data
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    sv = vocabs["summary"]

    model = CastModel(config.model_config(vocabs))
    state = OptimState()
    start_epoch = 1
    if resume is not None:
        loaded, _, meta = load_model(resume)
        check_vocab_compat(meta, vocabs)
        expected = {n: tuple(p.shape) for n, p in model.named_parameters()}
        diff = shape_diff(expected, {n: tuple(p.shape) for n, p in loaded.named_parameters()})
        if diff:
            raise CheckpointError(f"{resume}: checkpoint does not fit the configured model:\n" + "\n".join(diff))
        model.load_state_dict(loaded.state_dict())
        if _optim_path(resume).exists():
            state, ometa = load_optimizer(resume)
            if "rng" in ometa:
                rng.bit_generator.state = ometa["rng"]
        start_epoch = int(meta.get("epoch", 0)) + 1
    params = dict(model.named_parameters())
    hyper = config.adamw()

    log_fh = None
    best_path = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        best_path = str(out / "best.ckpt")
        log_fh = open(out / "train_log.jsonl", "a" if resume else "w", encoding="utf-8")
        log_fh.write(json.dumps({"config": config.to_dict(), "resume": str(resume) if resume else None}) + "\n")

    history: list[TrainLogRecord] = []
    best_loss = evaluate_loss(model, valid_data, sv, config.batch_size) if resume is not None else float("inf")
    best_epoch = start_epoch - 1
    best_state = {k: v.clone() for k, v in model.state_dict().items()}
    t0 = time.perf_counter()
    try:
        for epoch in range(start_epoch, config.max_epochs + 1):
            model.train()
            order = rng.permutation(len(train_data))
            total, count = 0.0, 0
            for i in range(0, len(order), config.batch_size):
                batch = make_batch([train_data[j] for j in order[i : i + config.batch_size]], sv, use_copy=not config.no_copy)
                loss = model.loss(batch)
                adamw_step(params, backward(loss, params), state, hyper)
                n = int(batch.tgt_mask.sum())
                total += loss.item() * n
                count += n
            valid_loss = evaluate_loss(model, valid_data, sv, config.batch_size)
            valid_bleu = corpus_bleu(model, valid_data, sv, config.batch_size) if config.valid_bleu else None
            improved = valid_loss < best_loss
            record = TrainLogRecord(epoch, total / count, valid_loss, valid_bleu, time.perf_counter() - t0)
            if improved:
                best_loss, best_epoch = valid_loss, epoch
                best_state = {k: v.clone() for k, v in model.state_dict().items()}
                if best_path is not None:
                    save_model(best_path, model, vocabs, run_config=config.to_dict(), epoch=epoch, valid_loss=valid_loss)
                    save_optimizer(best_path, state, epoch=epoch, rng=rng.bit_generator.state)
                    record.checkpoint = best_path
            history.append(record)
            if log_fh is not None:
                log_fh.write(json.dumps(record.to_json()) + "\n")
                log_fh.flush()
            if on_epoch is not None:
                on_epoch(record)
            if epoch - best_epoch >= config.patience:
                log.info("early stop at epoch %d (best %d)", epoch, best_epoch)
                break
    finally:
        if log_fh is not None:
            log_fh.close()
    model.load_state_dict(best_state)
    model.eval()
    return TrainResult(model, vocabs, history, best_epoch, best_loss, best_path)
