from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch

from ..preprocess.vocab import BOS, EOS, UNK, Vocabulary
from .cast import Batch, CastModel


@dataclass
class DecodeOutput:
    ids: list[int]  # extended ids, EOS excluded
    tokens: list[str]
    gammas: list[float] = field(default_factory=list)


def _to_inputs(ids: torch.Tensor, vocab_size: int) -> torch.Tensor:
    return ids.masked_fill(ids >= vocab_size, UNK)


def render(ids: list[int], vocab: Vocabulary, oov: list[str]) -> list[str]:
    V = len(vocab)
    return [vocab.itos[i] if i < V else oov[i - V] for i in ids]


def _select(batch: Batch, enc, rows: torch.Tensor):
    """Encoder outputs and the per-example batch fields for a subset/repeat of rows."""
    ast_states, code_states = enc
    sub = Batch(
        ids=[batch.ids[i] for i in rows.tolist()],
        code_ids=batch.code_ids[rows],
        code_mask=batch.code_mask[rows],
        code_ext_ids=batch.code_ext_ids[rows],
        oov=[batch.oov[i] for i in rows.tolist()],
        n_ext=batch.n_ext,
        node_labels=batch.node_labels,
        node_levels=batch.node_levels,
        pool_index=batch.pool_index,
        pool_shape=batch.pool_shape,
        struct_levels=batch.struct_levels,
        ast_index=batch.ast_index,
        ast_mask=batch.ast_mask[rows],
    )
    return sub, (ast_states[rows], code_states[rows])


@torch.no_grad()
def greedy(model: CastModel, batch: Batch, vocab: Vocabulary, max_len: int | None = None) -> list[DecodeOutput]:
    max_len = max_len or model.config.max_summary_len
    V = len(vocab)
    enc = model.encode(batch)
    B = len(batch)
    prev = torch.full((B, 1), BOS, dtype=torch.long)
    done = torch.zeros(B, dtype=torch.bool)
    out_ids: list[list[int]] = [[] for _ in range(B)]
    gammas: list[list[float]] = [[] for _ in range(B)]
    for _ in range(max_len):
        h = model.hidden(batch, _to_inputs(prev, V), enc)
        dist, gamma = model.step_distribution(batch, h[:, -1:], enc)
        nxt = dist[:, 0].argmax(-1)
        for b in range(B):
            if done[b]:
                continue
            tok = int(nxt[b])
            if tok == EOS:
                done[b] = True
                continue
            out_ids[b].append(tok)
            gammas[b].append(float(gamma[b, 0]))
        if bool(done.all()):
            break
        prev = torch.cat([prev, nxt[:, None]], dim=1)
    return [DecodeOutput(ids, render(ids, vocab, batch.oov[b]), gammas[b]) for b, ids in enumerate(out_ids)]


@torch.no_grad()
def beam_search(
    model: CastModel,
    batch: Batch,
    vocab: Vocabulary,
    width: int = 4,
    length_penalty: float = 1.0,
    max_len: int | None = None,
) -> list[DecodeOutput]:
    """Beam search with scores normalized by ``len ** length_penalty``."""
    max_len = max_len or model.config.max_summary_len
    V = len(vocab)
    enc = model.encode(batch)
    results = []
    for b in range(len(batch)):
        # (token ids, summed log-prob, gammas)
        alive: list[tuple[list[int], float, list[float]]] = [([], 0.0, [])]
        finished: list[tuple[list[int], float, list[float]]] = []
        for _ in range(max_len):
            rows = torch.full((len(alive),), b, dtype=torch.long)
            sub, sub_enc = _select(batch, enc, rows)
            prev = torch.tensor([[BOS] + ids for ids, _, _ in alive], dtype=torch.long)
            h = model.hidden(sub, _to_inputs(prev, V), sub_enc)
            dist, gamma = model.step_distribution(sub, h[:, -1:], sub_enc)
            logp = torch.log(dist[:, 0].clamp_min(1e-30))
            top_lp, top_ix = logp.topk(min(width, logp.shape[-1]), dim=-1)
            cands = []
            for k, (ids, score, gs) in enumerate(alive):
                g = float(gamma[k, 0])
                for lp, ix in zip(top_lp[k].tolist(), top_ix[k].tolist()):
                    cands.append((ids + [ix], score + lp, gs + [g]))
            cands.sort(key=lambda c: c[1], reverse=True)
            alive = []
            for ids, score, gs in cands:
                if ids[-1] == EOS:
                    finished.append((ids, score, gs))
                else:
                    alive.append((ids, score, gs))
                if len(alive) == width:
                    break
            if not alive:
                break
            best_done = max((_norm(s, len(i), length_penalty) for i, s, _ in finished), default=-math.inf)
            # scores only fall as hypotheses grow, so stop once no live beam can win
            if best_done > max(_norm(s, max_len, length_penalty) if length_penalty > 0 else s for _, s, _ in alive):
                break
        pool = finished or alive
        ids, _, gs = max(pool, key=lambda c: _norm(c[1], len(c[0]), length_penalty))
        if ids and ids[-1] == EOS:
            ids, gs = ids[:-1], gs[:-1]
        results.append(DecodeOutput(ids, render(ids, vocab, batch.oov[b]), gs))
    return results


def _norm(score: float, length: int, alpha: float) -> float:
    return score / (max(length, 1) ** alpha)
