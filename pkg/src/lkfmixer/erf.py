"""Effective receptive field maps from input gradients of the centre output pixel."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import autograd
from .tensor import Tensor, elementwise_mul, reduce_sum


@dataclass(frozen=True)
class ErfMap:
    values: np.ndarray  # (h, w), non-negative, max-normalised unless all zero
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]

    def to_pgm(self, path: str | os.PathLike) -> None:
        h, w = self.values.shape
        peak = self.values.max()
        scaled = self.values / peak if peak > 0 else self.values
        pix = np.floor(np.clip(scaled, 0, 1) * 255 + 0.5).astype(np.uint8)
        with open(path, "wb") as f:
            f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            f.write(pix.tobytes())

    def to_csv(self, path: str | os.PathLike) -> None:
        np.savetxt(path, self.values, delimiter=",", fmt="%.8g")


def erf_map(
    forward: Callable[[Tensor], Tensor],
    input_size: int | tuple[int, int],
    samples: int = 8,
    seed: int = 0,
    in_channels: int = 3,
    dtype=np.float32,
) -> ErfMap:
    """Mean |d(centre output pixel, summed over channels) / d input| over random inputs.

    Inputs are standard normal. The probe sits at index (H // 2, W // 2) of the
    output; gradients are averaged over samples and input channels.
    """
    h, w = (input_size, input_size) if isinstance(input_size, int) else input_size
    rng = np.random.default_rng(seed)
    acc = np.zeros((h, w), dtype=np.float64)
    for _ in range(samples):
        x = Tensor(rng.standard_normal((1, in_channels, h, w)), dtype=dtype)
        with autograd.record() as tape:
            out = forward(x)
            n, c, oh, ow = out.shape
            mask = np.zeros(out.shape, dtype=out.dtype)
            mask[:, :, oh // 2, ow // 2] = 1
            probe = reduce_sum(elementwise_mul(out, Tensor(mask, dtype=out.dtype)))
        g = autograd.backward(probe, tape, {"x": x})["x"].data
        acc += np.abs(g.astype(np.float64)).mean(axis=(0, 1))
    acc /= samples
    peak = acc.max()
    if peak > 0:
        acc /= peak
    meta = {"samples": samples, "seed": seed, "input_size": (h, w), "probe": (h // 2, w // 2)}
    return ErfMap(acc, meta)


def support_radius(erf: ErfMap | np.ndarray, threshold: float) -> int:
    """Half-width of the smallest centred square holding every value >= threshold * max."""
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    values = erf.values if isinstance(erf, ErfMap) else np.asarray(erf)
    peak = values.max()
    if peak <= 0:
        raise ValueError("degenerate ERF map: all values are zero")
    h, w = values.shape
    rows, cols = np.nonzero(values >= threshold * peak)
    return int(max(np.abs(rows - h // 2).max(), np.abs(cols - w // 2).max()))


def support_extent(erf: ErfMap | np.ndarray, threshold: float) -> tuple[int, int]:
    """(rows, cols) spanned by the values >= threshold * max."""
    values = erf.values if isinstance(erf, ErfMap) else np.asarray(erf)
    peak = values.max()
    if peak <= 0:
        raise ValueError("degenerate ERF map: all values are zero")
    rows, cols = np.nonzero(values >= threshold * peak)
    return int(rows.max() - rows.min() + 1), int(cols.max() - cols.min() + 1)
