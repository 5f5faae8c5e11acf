"""Two-phase recursive AST encoder.

Phase one runs a recursive network over each subtree and max-pools the
node states into one vector per subtree. Phase two runs a second
recursive network over the structure tree that links the subtrees.

Both phases are batched by node height: every node of a given height,
across all trees in the batch, is updated in one step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from ..nn.core import embedding_init_, glorot_


class ShapeError(ValueError):
    pass


@dataclass
class ForestLevels:
    """Height-ordered update schedule for a forest given by parent pointers."""

    n: int
    # per height >= 1: (node indices, child indices, position of each child's parent in node indices, child counts)
    levels: list[tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]]
    leaves: torch.Tensor

    @classmethod
    def from_parents(cls, parents: np.ndarray) -> ForestLevels:
        parents = np.asarray(parents, dtype=np.int64)
        n = len(parents)
        height = np.zeros(n, dtype=np.int64)
        # parents precede children (preorder), so one reverse sweep settles heights
        for i in range(n - 1, -1, -1):
            p = parents[i]
            if p >= 0 and height[p] < height[i] + 1:
                height[p] = height[i] + 1
        levels = []
        for hgt in range(1, int(height.max(initial=0)) + 1):
            nodes = np.nonzero(height == hgt)[0]
            pos = np.full(n, -1, dtype=np.int64)
            pos[nodes] = np.arange(len(nodes))
            has_parent = np.nonzero(parents >= 0)[0]
            children = has_parent[pos[parents[has_parent]] >= 0]
            slot = pos[parents[children]]
            counts = np.bincount(slot, minlength=len(nodes))
            levels.append(
                (torch.from_numpy(nodes), torch.from_numpy(children), torch.from_numpy(slot), torch.from_numpy(counts))
            )
        leaves = torch.from_numpy(np.nonzero(height == 0)[0])
        return cls(n, levels, leaves)


def run_rvnn(
    base: torch.Tensor,
    levels: ForestLevels,
    child_weight: torch.Tensor,
    leaf_tanh: bool,
) -> torch.Tensor:
    """h = tanh(base + W_child . mean(children h)); leaves: base or tanh(base)."""
    h = torch.tanh(base) if leaf_tanh else base
    for nodes, children, slot, counts in levels.levels:
        msg = torch.zeros(len(nodes), base.shape[1], dtype=base.dtype, device=base.device)
        msg = msg.index_add(0, slot, h[children])
        msg = msg / counts.to(base.dtype)[:, None]
        new = torch.tanh(base[nodes] + msg @ child_weight.T)
        h = h.index_copy(0, nodes, new)
    return h


class AstEncoder(nn.Module):
    """Holds ``WC``, ``WA``, ``embed`` and, unless aggregation is off, ``WS``, ``WB``."""

    def __init__(self, vocab_size: int, d_model: int, aggregate: bool = True):
        super().__init__()
        self.d = d_model
        self.aggregate = aggregate
        self.embed = nn.Parameter(embedding_init_(torch.empty(vocab_size, d_model)))
        self.WC = nn.Parameter(glorot_(torch.empty(d_model, d_model), d_model, d_model))
        self.WA = nn.Parameter(glorot_(torch.empty(d_model, d_model), d_model, d_model))
        if aggregate:
            self.WS = nn.Parameter(glorot_(torch.empty(d_model, d_model), d_model, d_model))
            self.WB = nn.Parameter(glorot_(torch.empty(d_model, d_model), d_model, d_model))

    def subtree_vectors(
        self,
        node_labels: torch.Tensor,
        node_levels: ForestLevels,
        pool_index: tuple[torch.Tensor, torch.Tensor],
        pool_shape: tuple[int, int],
    ) -> torch.Tensor:
        """One max-pooled vector per subtree, shape (num_subtrees, d)."""
        c = self.embed[node_labels]
        h = run_rvnn(c @ self.WC.T, node_levels, self.WA, leaf_tanh=False)
        S, N = pool_shape
        padded = torch.full((S, N, self.d), float("-inf"), dtype=h.dtype, device=h.device)
        padded = padded.index_put(pool_index, h)
        return padded.max(dim=1).values

    def structure_states(self, s: torch.Tensor, struct_levels: ForestLevels) -> torch.Tensor:
        if not self.aggregate:
            return s
        return run_rvnn(s @ self.WS.T, struct_levels, self.WB, leaf_tanh=True)


# -- single-tree reference forms ----------------------------------------------


def encode_subtree(labels, parents, embed, WC, WA) -> torch.Tensor:
    """Max-pooled RvNN vector of one subtree given preorder labels/parents."""
    n = len(labels)
    children: list[list[int]] = [[] for _ in range(n)]
    for i, p in enumerate(parents):
        if p >= 0:
            children[p].append(i)
    h: list[torch.Tensor | None] = [None] * n
    for i in range(n - 1, -1, -1):
        x = WC @ embed[labels[i]]
        if children[i]:
            msg = sum(WA @ h[j] for j in children[i]) / len(children[i])
            x = torch.tanh(x + msg)
        h[i] = x
    return torch.stack(h).max(dim=0).values


def encode_structure(vectors, parents, WS, WB) -> list[torch.Tensor]:
    """Structure-tree RvNN; output in the same (preorder) order as ``vectors``."""
    if len(vectors) != len(parents):
        raise ShapeError(f"{len(vectors)} subtree vectors for {len(parents)} structure nodes")
    n = len(parents)
    children: list[list[int]] = [[] for _ in range(n)]
    for i, p in enumerate(parents):
        if p >= 0:
            children[p].append(i)
    h: list[torch.Tensor | None] = [None] * n
    for i in range(n - 1, -1, -1):
        x = WS @ vectors[i]
        if children[i]:
            x = x + sum(WB @ h[k] for k in children[i]) / len(children[i])
        h[i] = torch.tanh(x)
    return h
