"""Code-token transformer encoder and the serial two-source decoder."""

from __future__ import annotations

import torch
from torch import nn

from ..nn.core import embedding_init_
from .layers import FeedForward, MultiHeadAttention, RelativeSelfAttention, _linear


class LengthError(ValueError):
    pass


class EncoderLayer(nn.Module):
    def __init__(self, d_model, n_heads, d_ff, k_clip, dropout):
        super().__init__()
        self.attn = RelativeSelfAttention(d_model, n_heads, k_clip, dropout)
        self.ff = FeedForward(d_model, d_ff, dropout)
        self.ln1 = nn.LayerNorm(d_model)
        self.ln2 = nn.LayerNorm(d_model)
        self.drop = nn.Dropout(dropout)

    def forward(self, x, mask):
        x = x + self.drop(self.attn(self.ln1(x), mask))
        return x + self.drop(self.ff(self.ln2(x)))


class CodeEncoder(nn.Module):
    def __init__(self, vocab_size, d_model, n_heads, n_layers, d_ff, k_clip, dropout, max_len=200):
        super().__init__()
        self.max_len = max_len
        self.embed = nn.Parameter(embedding_init_(torch.empty(vocab_size, d_model)))
        for i in range(n_layers):
            self.add_module(f"L{i}", EncoderLayer(d_model, n_heads, d_ff, k_clip, dropout))
        self.n_layers = n_layers
        self.ln_f = nn.LayerNorm(d_model)
        self.drop = nn.Dropout(dropout)

    def layers(self):
        return [getattr(self, f"L{i}") for i in range(self.n_layers)]

    def forward(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        if ids.shape[1] > self.max_len:
            raise LengthError(f"code length {ids.shape[1]} exceeds {self.max_len}")
        if ids.shape[1] < 1:
            raise LengthError("empty code sequence")
        x = self.drop(self.embed[ids])
        for layer in self.layers():
            x = layer(x, mask)
        return self.ln_f(x)


class DecoderLayer(nn.Module):
    """Masked self-attention, then AST cross-attention, then code cross-attention."""

    def __init__(self, d_model, n_heads, d_ff, dropout):
        super().__init__()
        self.self = MultiHeadAttention(d_model, n_heads, dropout)
        self.xast = MultiHeadAttention(d_model, n_heads, dropout, cross=True)
        self.xcode = MultiHeadAttention(d_model, n_heads, dropout, cross=True)
        self.ff = FeedForward(d_model, d_ff, dropout)
        self.ln1 = nn.LayerNorm(d_model)
        self.ln2 = nn.LayerNorm(d_model)
        self.ln3 = nn.LayerNorm(d_model)
        self.ln4 = nn.LayerNorm(d_model)
        self.drop = nn.Dropout(dropout)

    def forward(self, s, pad_mask, ast_states, ast_mask, code_states, code_mask):
        s = s + self.drop(self.self(self.ln1(s), key_mask=pad_mask, causal=True))
        z = s + self.drop(self.xast(self.ln2(s), ast_states, ast_mask))
        y = z + self.drop(self.xcode(self.ln3(z), code_states, code_mask))
        return y + self.drop(self.ff(self.ln4(y)))


class Decoder(nn.Module):
    def __init__(self, vocab_size, d_model, n_heads, n_layers, d_ff, dropout, max_len=32):
        super().__init__()
        self.embed = nn.Parameter(embedding_init_(torch.empty(vocab_size, d_model)))
        self.pos = nn.Parameter(embedding_init_(torch.empty(max_len, d_model)))
        for i in range(n_layers):
            self.add_module(f"L{i}", DecoderLayer(d_model, n_heads, d_ff, dropout))
        self.n_layers = n_layers
        self.ln_f = nn.LayerNorm(d_model)
        self.out = _linear(d_model, vocab_size)
        self.drop = nn.Dropout(dropout)

    def layers(self):
        return [getattr(self, f"L{i}") for i in range(self.n_layers)]

    def forward(self, prev_ids, pad_mask, ast_states, ast_mask, code_states, code_mask):
        """Final hidden states h^(s), shape (B, T, d)."""
        T = prev_ids.shape[1]
        if T > self.pos.shape[0]:
            raise LengthError(f"summary length {T} exceeds {self.pos.shape[0]}")
        s = self.drop(self.embed[prev_ids] + self.pos[:T])
        for layer in self.layers():
            s = layer(s, pad_mask, ast_states, ast_mask, code_states, code_mask)
        return self.ln_f(s)

    def generation_distribution(self, hidden: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.out(hidden), dim=-1)
