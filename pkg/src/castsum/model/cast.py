"""The full summarizer: AST encoder + code encoder + serial decoder + copy head."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import torch
from torch import nn

from ..preprocess.dataset import EncodedExample
from ..preprocess.vocab import BOS, EOS, PAD, UNK, Vocabulary
from .ast_encoder import AstEncoder, ForestLevels
from .copy import CopyHead, mix_distributions
from .seq import CodeEncoder, Decoder

_TINY = 1e-12


@dataclass
class ModelConfig:
    ast_vocab: int
    code_vocab: int
    summary_vocab: int
    d_model: int = 128
    n_heads: int = 4
    enc_layers: int = 2
    dec_layers: int = 2
    d_ff: int = 512
    dropout: float = 0.1
    k_clip: int = 16
    max_code_len: int = 200
    max_summary_len: int = 30
    use_copy: bool = True
    aggregate: bool = True

    def __post_init__(self):
        for name in ("d_model", "n_heads", "enc_layers", "dec_layers", "d_ff", "k_clip"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.d_model % self.n_heads:
            raise ValueError("d_model must be divisible by n_heads")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Batch:
    ids: list[str]
    code_ids: torch.Tensor  # (B, n)
    code_mask: torch.Tensor
    code_ext_ids: torch.Tensor  # code positions in the extended summary vocabulary
    oov: list[list[str]]
    n_ext: int
    node_labels: torch.Tensor  # (N,) over every subtree node in the batch
    node_levels: ForestLevels
    pool_index: tuple[torch.Tensor, torch.Tensor]
    pool_shape: tuple[int, int]
    struct_levels: ForestLevels
    ast_index: tuple[torch.Tensor, torch.Tensor]  # (example, position) per subtree
    ast_mask: torch.Tensor  # (B, L)
    prev_ids: torch.Tensor | None = None  # (B, T) decoder input, starts with BOS
    targets: torch.Tensor | None = None  # (B, T) extended ids ending with EOS
    tgt_mask: torch.Tensor | None = None

    def __len__(self) -> int:
        return len(self.ids)


def make_batch(
    examples: list[EncodedExample],
    summary_vocab: Vocabulary,
    use_copy: bool = True,
    with_targets: bool = True,
) -> Batch:
    B = len(examples)
    V = len(summary_vocab)
    n = max(len(e.code_ids) for e in examples)
    code_ids = torch.full((B, n), PAD, dtype=torch.long)
    code_ext = torch.zeros((B, n), dtype=torch.long)
    code_mask = torch.zeros((B, n), dtype=torch.bool)
    oov: list[list[str]] = []
    for b, e in enumerate(examples):
        code_ids[b, : len(e.code_ids)] = torch.tensor(e.code_ids, dtype=torch.long)
        code_mask[b, : len(e.code_ids)] = True
        seen: dict[str, int] = {}
        ext = []
        for tok in e.code_tokens:
            if tok in summary_vocab:
                ext.append(summary_vocab.stoi[tok])
            else:
                ext.append(V + seen.setdefault(tok, len(seen)))
        code_ext[b, : len(ext)] = torch.tensor(ext, dtype=torch.long)
        oov.append(list(seen))
    n_ext = max((len(o) for o in oov), default=0) if use_copy else 0

    labels, parents, pool_sub, pool_pos = [], [], [], []
    struct_parents, ast_ex, ast_pos = [], [], []
    max_nodes = 0
    for b, e in enumerate(examples):
        sub_base = len(struct_parents)
        for k, (ids, par) in enumerate(zip(e.node_ids, e.node_parents)):
            base = len(labels)
            labels.extend(ids)
            parents.extend(p + base if p >= 0 else -1 for p in par)
            pool_sub.extend([sub_base + k] * len(ids))
            pool_pos.extend(range(len(ids)))
            max_nodes = max(max_nodes, len(ids))
        struct_parents.extend(p + sub_base if p >= 0 else -1 for p in e.struct_parents)
        ast_ex.extend([b] * len(e.struct_parents))
        ast_pos.extend(range(len(e.struct_parents)))
    L = max(len(e.struct_parents) for e in examples)
    ast_mask = torch.zeros((B, L), dtype=torch.bool)
    ast_mask[torch.tensor(ast_ex), torch.tensor(ast_pos)] = True

    batch = Batch(
        ids=[e.id for e in examples],
        code_ids=code_ids,
        code_mask=code_mask,
        code_ext_ids=code_ext,
        oov=oov,
        n_ext=n_ext,
        node_labels=torch.tensor(labels, dtype=torch.long),
        node_levels=ForestLevels.from_parents(np.array(parents)),
        pool_index=(torch.tensor(pool_sub), torch.tensor(pool_pos)),
        pool_shape=(len(struct_parents), max_nodes),
        struct_levels=ForestLevels.from_parents(np.array(struct_parents)),
        ast_index=(torch.tensor(ast_ex), torch.tensor(ast_pos)),
        ast_mask=ast_mask,
    )
    if with_targets:
        T = max(len(e.summary_tokens) for e in examples) + 1
        prev = torch.full((B, T), PAD, dtype=torch.long)
        tgt = torch.full((B, T), PAD, dtype=torch.long)
        mask = torch.zeros((B, T), dtype=torch.bool)
        for b, e in enumerate(examples):
            gold = [target_id(tok, summary_vocab, oov[b] if use_copy else ()) for tok in e.summary_tokens]
            seq = gold + [EOS]
            tgt[b, : len(seq)] = torch.tensor(seq)
            inp = [BOS] + [g if g < V else UNK for g in gold]
            prev[b, : len(inp)] = torch.tensor(inp)
            mask[b, : len(seq)] = True
        batch.prev_ids, batch.targets, batch.tgt_mask = prev, tgt, mask
    return batch


def target_id(token: str, vocab: Vocabulary, oov) -> int:
    if token in vocab:
        return vocab.stoi[token]
    if token in oov:
        return len(vocab) + list(oov).index(token)
    return UNK


class CastModel(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        c = config
        self.ast = AstEncoder(c.ast_vocab, c.d_model, aggregate=c.aggregate)
        self.code = CodeEncoder(
            c.code_vocab, c.d_model, c.n_heads, c.enc_layers, c.d_ff, c.k_clip, c.dropout, c.max_code_len
        )
        self.dec = Decoder(c.summary_vocab, c.d_model, c.n_heads, c.dec_layers, c.d_ff, c.dropout, c.max_summary_len + 2)
        if c.use_copy:
            self.copy = CopyHead(c.d_model)

    # -- encoding ---------------------------------------------------------

    def encode(self, batch: Batch):
        s = self.ast.subtree_vectors(batch.node_labels, batch.node_levels, batch.pool_index, batch.pool_shape)
        h_ast = self.ast.structure_states(s, batch.struct_levels)
        B, L = batch.ast_mask.shape
        ast_states = h_ast.new_zeros(B, L, h_ast.shape[1]).index_put(batch.ast_index, h_ast)
        code_states = self.code(batch.code_ids, batch.code_mask)
        return ast_states, code_states

    def hidden(self, batch: Batch, prev_ids: torch.Tensor, enc, pad_mask=None) -> torch.Tensor:
        ast_states, code_states = enc
        if pad_mask is None:
            pad_mask = torch.ones_like(prev_ids, dtype=torch.bool)
        return self.dec(prev_ids, pad_mask, ast_states, batch.ast_mask, code_states, batch.code_mask)

    # -- probabilities --------------------------------------------------------

    def step_distribution(self, batch: Batch, hidden: torch.Tensor, enc):
        """P_t over the extended vocabulary and gamma_t for decoder states (B, T, d)."""
        p_gen = self.dec.generation_distribution(hidden)
        if not self.config.use_copy:
            return p_gen, torch.ones(hidden.shape[:-1], dtype=hidden.dtype)
        _, code_states = enc
        p_copy, gamma = self.copy(code_states, hidden, batch.code_mask)
        ext = batch.code_ext_ids.unsqueeze(1)
        return mix_distributions(p_gen, p_copy, gamma, ext, batch.n_ext), gamma

    def loss(self, batch: Batch) -> torch.Tensor:
        """Mean negative log-likelihood per target token (teacher forcing)."""
        enc = self.encode(batch)
        h = self.hidden(batch, batch.prev_ids, enc, batch.tgt_mask)
        logits = self.dec.out(h)
        V = logits.shape[-1]
        tgt = batch.targets
        if not self.config.use_copy:
            nll = -torch.log_softmax(logits, -1).gather(-1, tgt.clamp(max=V - 1).unsqueeze(-1)).squeeze(-1)
        else:
            p_gen = torch.softmax(logits, -1)
            _, code_states = enc
            p_copy, gamma = self.copy(code_states, h, batch.code_mask)
            in_vocab = tgt < V
            gen = p_gen.gather(-1, tgt.clamp(max=V - 1).unsqueeze(-1)).squeeze(-1) * in_vocab
            hits = batch.code_ext_ids.unsqueeze(1) == tgt.unsqueeze(-1)  # (B, T, n)
            copy = (p_copy * hits).sum(-1)
            nll = -torch.log(gamma * gen + (1 - gamma) * copy + _TINY)
        mask = batch.tgt_mask.to(nll.dtype)
        return (nll * mask).sum() / mask.sum()

    def named_tensors(self) -> dict[str, torch.Tensor]:
        return dict(self.named_parameters())
