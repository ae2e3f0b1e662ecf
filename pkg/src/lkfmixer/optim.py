"""Adam and the single-cycle cosine learning-rate schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ParamStore
from .tensor import Tensor


def cosine_lr(t: int, total: int, lr_init: float = 1e-3, lr_min: float = 1e-6) -> float:
    if total <= 0:
        return lr_init
    if not 0 <= t <= total:
        raise ValueError(f"step {t} outside [0, {total}]")
    return lr_min + (lr_init - lr_min) * 0.5 * (1.0 + math.cos(math.pi * t / total))


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: ParamStore, grads: dict[str, Tensor], state: AdamState, t: int, lr: float
) -> ParamStore:
    """One bias-corrected Adam update; ``t`` counts from 1. Returns a new store."""
    if t < 1:
        raise ValueError(f"Adam step index starts at 1, got {t}")
    if set(grads) != set(params):
        extra = sorted(set(grads) ^ set(params))
        raise KeyError(f"gradient/parameter names differ, first: {extra[0]}")
    if state.m and set(state.m) != set(params):
        raise KeyError("optimizer state does not match the parameter store")
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    out = ParamStore()
    for name, p in params.items():
        g = grads[name].data.astype(np.float64)
        m = state.m.get(name, np.zeros_like(g))
        v = state.v.get(name, np.zeros_like(g))
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        state.m[name], state.v[name] = m, v
        step = lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        out[name] = Tensor(p.data - step, dtype=p.dtype)
    return out
