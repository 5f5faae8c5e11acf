from __future__ import annotations

import math

import torch
from torch import nn
from torch.nn import functional as F

from ..nn.core import glorot_


def _linear(d_in: int, d_out: int, bias: bool = True) -> nn.Linear:
    lin = nn.Linear(d_in, d_out, bias=bias)
    glorot_(lin.weight, d_in, d_out)
    if bias:
        nn.init.zeros_(lin.bias)
    return lin


def masked_softmax(logits: torch.Tensor, key_mask: torch.Tensor | None) -> torch.Tensor:
    """Softmax over the last axis; ``key_mask`` is True where a key is real."""
    if key_mask is not None:
        logits = logits.masked_fill(~key_mask, torch.finfo(logits.dtype).min)
    return torch.softmax(logits, dim=-1)


def relative_index(n_q: int, n_k: int, k_clip: int, device=None) -> torch.Tensor:
    """(n_q, n_k) table of clip(j - i) shifted into [0, 2*k_clip]."""
    q = torch.arange(n_q, device=device)[:, None]
    k = torch.arange(n_k, device=device)[None, :]
    return (k - q).clamp(-k_clip, k_clip) + k_clip


class RelativeSelfAttention(nn.Module):
    """Multi-head self-attention with clipped relative position keys and values."""

    def __init__(self, d_model: int, n_heads: int, k_clip: int, dropout: float = 0.0):
        super().__init__()
        if d_model % n_heads:
            raise ValueError("d_model must be divisible by n_heads")
        self.h = n_heads
        self.dk = d_model // n_heads
        self.k_clip = k_clip
        self.qkv = _linear(d_model, 3 * d_model, bias=False)
        self.proj = _linear(d_model, d_model)
        self.rel_k = nn.Parameter(torch.empty(2 * k_clip + 1, self.dk))
        self.rel_v = nn.Parameter(torch.empty(2 * k_clip + 1, self.dk))
        glorot_(self.rel_k, 2 * k_clip + 1, self.dk)
        glorot_(self.rel_v, 2 * k_clip + 1, self.dk)
        self.drop = nn.Dropout(dropout)
        self.last_weights: torch.Tensor | None = None

    def scores(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Raw logits e_ij (B, H, n, n) plus the value tensors needed afterwards."""
        B, n, _ = x.shape
        q, k, v = self.qkv(x).view(B, n, 3, self.h, self.dk).permute(2, 0, 3, 1, 4)
        rel = relative_index(n, n, self.k_clip, x.device)
        ak = self.rel_k[rel]  # (n, n, dk)
        e = q @ k.transpose(-1, -2) + torch.einsum("bhid,ijd->bhij", q, ak)
        return e / math.sqrt(self.dk), v, rel

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        B, n, d = x.shape
        e, v, rel = self.scores(x)
        alpha = masked_softmax(e, mask[:, None, None, :])
        self.last_weights = alpha.detach()
        alpha = self.drop(alpha)
        av = self.rel_v[rel]
        o = alpha @ v + torch.einsum("bhij,ijd->bhid", alpha, av)
        return self.proj(o.transpose(1, 2).reshape(B, n, d))


class MultiHeadAttention(nn.Module):
    """Plain scaled dot-product attention; self or cross."""

    def __init__(self, d_model: int, n_heads: int, dropout: float = 0.0, cross: bool = False):
        super().__init__()
        if d_model % n_heads:
            raise ValueError("d_model must be divisible by n_heads")
        self.h = n_heads
        self.dk = d_model // n_heads
        self.cross = cross
        if cross:
            self.q = _linear(d_model, d_model, bias=False)
            self.kv = _linear(d_model, 2 * d_model, bias=False)
        else:
            self.qkv = _linear(d_model, 3 * d_model, bias=False)
        self.proj = _linear(d_model, d_model)
        self.drop = nn.Dropout(dropout)
        self.last_weights: torch.Tensor | None = None

    def forward(
        self,
        x: torch.Tensor,
        memory: torch.Tensor | None = None,
        key_mask: torch.Tensor | None = None,
        causal: bool = False,
    ) -> torch.Tensor:
        B, n, d = x.shape
        if self.cross:
            m = memory.shape[1]
            q = self.q(x).view(B, n, self.h, self.dk).transpose(1, 2)
            k, v = self.kv(memory).view(B, m, 2, self.h, self.dk).permute(2, 0, 3, 1, 4)
        else:
            m = n
            q, k, v = self.qkv(x).view(B, n, 3, self.h, self.dk).permute(2, 0, 3, 1, 4)
        e = q @ k.transpose(-1, -2) / math.sqrt(self.dk)
        mask = None
        if key_mask is not None:
            mask = key_mask[:, None, None, :]
        if causal:
            tri = torch.ones(n, m, dtype=torch.bool, device=x.device).tril()
            mask = tri if mask is None else mask & tri
        alpha = masked_softmax(e, mask)
        self.last_weights = alpha.detach()
        o = self.drop(alpha) @ v
        return self.proj(o.transpose(1, 2).reshape(B, n, d))


class FeedForward(nn.Module):
    def __init__(self, d_model: int, d_ff: int, dropout: float = 0.0):
        super().__init__()
        self.w1 = _linear(d_model, d_ff)
        self.w2 = _linear(d_ff, d_model)
        self.drop = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.w2(self.drop(F.relu(self.w1(x))))
