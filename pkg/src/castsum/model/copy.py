"""Pointer-style copying from code tokens into the summary."""

from __future__ import annotations

import torch
from torch import nn

from ..nn.core import glorot_
from .layers import masked_softmax


class CopyHead(nn.Module):
    """Copy attention projection ``Wcp`` and the scalar gate."""

    def __init__(self, d_model: int):
        super().__init__()
        self.Wcp = nn.Parameter(glorot_(torch.empty(d_model, d_model), d_model, d_model))
        self.gate = nn.Linear(d_model, 1)
        glorot_(self.gate.weight, d_model, 1)
        nn.init.zeros_(self.gate.bias)

    def forward(self, code_states, dec_states, code_mask=None):
        """Copy distribution over code positions and the generation weight gamma."""
        p_copy = copy_distribution(code_states, dec_states, self.Wcp, code_mask)
        gamma = torch.sigmoid(self.gate(dec_states)).squeeze(-1)
        return p_copy, gamma


def copy_distribution(
    code_states: torch.Tensor,
    dec_states: torch.Tensor,
    Wcp: torch.Tensor,
    code_mask: torch.Tensor | None = None,
) -> torch.Tensor:
    """softmax_i <Wcp h_i^(c), h_t^(s)>.

    code_states: (..., Tc, d); dec_states: (..., T, d) -> (..., T, Tc).
    """
    keys = code_states @ Wcp.T
    logits = dec_states @ keys.transpose(-1, -2)
    mask = None if code_mask is None else code_mask.unsqueeze(-2)
    return masked_softmax(logits, mask)


def mix_distributions(
    p_gen: torch.Tensor,
    p_copy: torch.Tensor,
    gamma: torch.Tensor,
    code_ext_ids: torch.Tensor,
    n_extended: int,
) -> torch.Tensor:
    """gamma * P_gen + (1 - gamma) * copy mass, over the extended vocabulary.

    p_gen: (..., V); p_copy: (..., Tc); gamma: (...); code_ext_ids: ids of
    each code position in the extended vocabulary, broadcastable to p_copy.
    """
    V = p_gen.shape[-1]
    g = gamma.unsqueeze(-1)
    out = torch.cat([g * p_gen, p_gen.new_zeros(*p_gen.shape[:-1], n_extended)], dim=-1)
    idx = code_ext_ids.expand_as(p_copy)
    return out.scatter_add(-1, idx, (1 - g) * p_copy)
