"""Pixel L1 and frequency-domain L1 losses, returned as (1, 1, 1, 1) tensors."""

from __future__ import annotations

import numpy as np

from . import autograd
from .fft import fft2
from .tensor import ShapeError, Tensor, elementwise_add, scale


def _check(pred: Tensor, target: Tensor, name: str) -> None:
    if pred.shape != target.shape:
        raise ShapeError(f"{name}: shape mismatch {pred.shape} vs {target.shape}")


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    """mean |pred - target|; the subgradient at 0 is 0."""
    _check(pred, target, "l1_loss")
    diff = pred.data - target.data
    count = diff.size
    out = Tensor._wrap(np.abs(diff).mean(dtype=np.float64).astype(pred.dtype).reshape(1, 1, 1, 1))

    def vjp(g):
        gp = (np.sign(diff) * (g.reshape(()) / count)).astype(pred.dtype)
        return gp, -gp

    autograd.push(out, (pred, target), vjp)
    return out


def fft_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean absolute difference of the stacked real and imaginary 2-D DFT parts.

    The transform is per (sample, channel) plane and unnormalised.
    """
    _check(pred, target, "fft_loss")
    diff = pred.data.astype(np.float64) - target.data.astype(np.float64)
    spec = fft2(diff)
    count = 2 * diff.size
    value = (np.abs(spec.real).sum() + np.abs(spec.imag).sum()) / count
    out = Tensor._wrap(np.array(value, dtype=pred.dtype).reshape(1, 1, 1, 1))

    def vjp(g):
        k = float(g.reshape(())) / count
        # adjoint of x -> (Re F x, Im F x) applied to (sign Re, sign Im); F is symmetric
        back = fft2(np.sign(spec.real) - 1j * np.sign(spec.imag)).real * k
        gp = back.astype(pred.dtype)
        return gp, -gp

    autograd.push(out, (pred, target), vjp)
    return out


def training_loss(pred: Tensor, target: Tensor, fft_weight: float) -> tuple[Tensor, Tensor, Tensor]:
    """(total, l1, fft) with total = l1 + fft_weight * fft."""
    l1 = l1_loss(pred, target)
    ff = fft_loss(pred, target)
    return elementwise_add(l1, scale(ff, fft_weight)), l1, ff
