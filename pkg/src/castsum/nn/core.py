"""Gradient plumbing on top of torch autograd.

Parameters live in an ordinary ``torch.nn.Module``; this module adds the
pieces the rest of the package relies on: name-keyed gradients, a
hand-written AdamW step, a central-difference gradient check and the
initialization scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import torch


class GraphError(ValueError):
    pass


def backward(loss: torch.Tensor, params: Mapping[str, torch.Tensor]) -> dict[str, torch.Tensor]:
    """Gradients of a scalar ``loss`` for every named parameter.

    Parameters the loss does not depend on get zeros.
    """
    if loss.numel() != 1:
        raise GraphError(f"loss must be a scalar, got shape {tuple(loss.shape)}")
    names = list(params)
    tensors = [params[n] for n in names]
    grads = torch.autograd.grad(loss.reshape(()), tensors, allow_unused=True)
    return {
        n: (torch.zeros_like(t) if g is None else g) for n, t, g in zip(names, tensors, grads)
    }


@dataclass
class AdamWConfig:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01


@dataclass
class OptimState:
    m: dict[str, torch.Tensor] = field(default_factory=dict)
    v: dict[str, torch.Tensor] = field(default_factory=dict)
    t: int = 0


@torch.no_grad()
def adamw_step(
    params: Mapping[str, torch.Tensor],
    grads: Mapping[str, torch.Tensor],
    state: OptimState,
    hyper: AdamWConfig,
) -> None:
    """One decoupled-weight-decay Adam update, in place on ``params`` and ``state``."""
    state.t += 1
    t = state.t
    b1, b2 = hyper.beta1, hyper.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {tuple(g.shape)} != parameter shape {tuple(p.shape)} for {name}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = torch.zeros_like(p)
            state.v[name] = torch.zeros_like(p)
        v = state.v[name]
        m.mul_(b1).add_(g, alpha=1.0 - b1)
        v.mul_(b2).addcmul_(g, g, value=1.0 - b2)
        m_hat = m / c1
        v_hat = v / c2
        update = m_hat / (v_hat.sqrt() + hyper.eps)
        if hyper.weight_decay:
            p.sub_(hyper.lr * hyper.weight_decay * p)
        p.sub_(hyper.lr * update)


def grad_check(
    loss_fn: Callable[[], torch.Tensor],
    params: Mapping[str, torch.Tensor],
    eps: float = 1e-5,
    fraction: float = 0.01,
    min_coords: int = 10,
    seed: int = 0,
    report: list | None = None,
) -> float:
    """Largest relative error between autograd and central differences.

    ``loss_fn`` must recompute the loss from ``params`` (which should be
    float64). A random ``fraction`` of each tensor's coordinates is checked,
    at least ``min_coords`` (or all of them when the tensor is smaller).
    """
    loss = loss_fn()
    analytic = backward(loss, params)
    gen = torch.Generator().manual_seed(seed)
    worst = 0.0
    with torch.no_grad():
        for name, p in params.items():
            flat = p.view(-1)
            k = min(flat.numel(), max(min_coords, math.ceil(fraction * flat.numel())))
            coords = torch.randperm(flat.numel(), generator=gen)[:k].tolist()
            a_flat = analytic[name].reshape(-1)
            for i in coords:
                orig = flat[i].item()
                flat[i] = orig + eps
                hi = flat[i].item()
                up = loss_fn().item()
                flat[i] = orig - eps
                lo = flat[i].item()
                down = loss_fn().item()
                flat[i] = orig
                # divide by the step actually taken; orig +- eps is rounded
                numeric = (up - down) / (hi - lo)
                a = a_flat[i].item()
                err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
                if report is not None:
                    report.append((name, i, a, numeric, err))
                worst = max(worst, err)
    return worst


def glorot_(t: torch.Tensor, fan_in: int, fan_out: int, gen: torch.Generator | None = None) -> torch.Tensor:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    with torch.no_grad():
        return t.uniform_(-bound, bound, generator=gen)


def embedding_init_(t: torch.Tensor, gen: torch.Generator | None = None) -> torch.Tensor:
    with torch.no_grad():
        return t.uniform_(-0.1, 0.1, generator=gen)
