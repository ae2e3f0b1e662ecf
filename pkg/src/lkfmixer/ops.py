"""Neural building blocks on :class:`~lkfmixer.tensor.Tensor`.

Every function here is differentiable: while a tape is recording it pushes a
vector-Jacobian closure next to its output.  All convolutions are stride 1
with zero "same" padding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import autograd
from .tensor import ShapeError, Tensor


@dataclass(frozen=True)
class ConvWeights:
    """Kernel (c_out, c_in/groups, kh, kw), bias (c_out, 1, 1, 1), group count."""

    kernel: Tensor
    bias: Tensor
    groups: int = 1

    def __post_init__(self) -> None:
        c_out, _, kh, kw = self.kernel.shape
        if kh % 2 == 0 or kw % 2 == 0:
            raise ShapeError(f"kernel size must be odd, got {kh}x{kw}")
        if self.groups < 1 or c_out % self.groups:
            raise ShapeError(f"groups={self.groups} does not divide c_out={c_out}")
        if self.bias.shape != (c_out, 1, 1, 1):
            raise ShapeError(f"bias shape {self.bias.shape} != ({c_out}, 1, 1, 1)")

    @property
    def c_out(self) -> int:
        return self.kernel.shape[0]

    @property
    def c_in(self) -> int:
        return self.kernel.shape[1] * self.groups

    @property
    def is_depthwise(self) -> bool:
        return self.kernel.shape[1] == 1 and self.groups == self.c_out


def _pad(x: np.ndarray, ph: int, pw: int) -> np.ndarray:
    if ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))


def _depthwise_fwd(xp: np.ndarray, k: np.ndarray, h: int, w: int) -> np.ndarray:
    kh, kw = k.shape[2:]
    out = np.zeros((xp.shape[0], xp.shape[1], h, w), dtype=xp.dtype)
    for u in range(kh):
        for v in range(kw):
            out += xp[:, :, u : u + h, v : v + w] * k[:, 0, u, v][:, None, None]
    return out


def _im2col(xp: np.ndarray, kh: int, kw: int, h: int, w: int) -> np.ndarray:
    n, c = xp.shape[:2]
    if kh == 1 and kw == 1:
        return xp.reshape(n, c, h * w)
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))  # n, c, h, w, kh, kw
    return win.transpose(0, 1, 4, 5, 2, 3).reshape(n, c * kh * kw, h * w)


def _col2im(cols: np.ndarray, c: int, kh: int, kw: int, h: int, w: int) -> np.ndarray:
    n = cols.shape[0]
    cols = cols.reshape(n, c, kh, kw, h, w)
    xp = np.zeros((n, c, h + kh - 1, w + kw - 1), dtype=cols.dtype)
    for u in range(kh):
        for v in range(kw):
            xp[:, :, u : u + h, v : v + w] += cols[:, :, u, v]
    return xp


def conv2d(x: Tensor, w: ConvWeights) -> Tensor:
    n, c, h, wd = x.shape
    if c != w.c_in:
        raise ShapeError(f"conv2d: input has {c} channels, weights expect {w.c_in}")
    k = w.kernel.data
    c_out, cpg, kh, kw = k.shape
    ph, pw = kh // 2, kw // 2
    xp = _pad(x.data, ph, pw)
    bias = w.bias.data.reshape(1, c_out, 1, 1)

    if w.is_depthwise:
        out = _depthwise_fwd(xp, k, h, wd) + bias

        def vjp(g):
            gxp = np.zeros_like(xp)
            gk = np.empty_like(k)
            for u in range(kh):
                for v in range(kw):
                    gxp[:, :, u : u + h, v : v + wd] += g * k[:, 0, u, v][:, None, None]
                    gk[:, 0, u, v] = (g * xp[:, :, u : u + h, v : v + wd]).sum(axis=(0, 2, 3))
            gx = gxp[:, :, ph : ph + h, pw : pw + wd]
            gb = g.sum(axis=(0, 2, 3)).reshape(c_out, 1, 1, 1)
            return gx, gk, gb

    else:
        G = w.groups
        og = c_out // G
        cols = [_im2col(xp[:, gi * cpg : (gi + 1) * cpg], kh, kw, h, wd) for gi in range(G)]
        mats = [k[gi * og : (gi + 1) * og].reshape(og, -1) for gi in range(G)]
        out = np.concatenate([m @ col for m, col in zip(mats, cols)], axis=1)
        out = out.reshape(n, c_out, h, wd) + bias

        def vjp(g):
            g2 = g.reshape(n, c_out, h * wd)
            gk = np.empty_like(k)
            gx_parts = []
            for gi in range(G):
                gg = g2[:, gi * og : (gi + 1) * og]
                gk[gi * og : (gi + 1) * og] = np.tensordot(
                    gg, cols[gi], axes=([0, 2], [0, 2])
                ).reshape(og, cpg, kh, kw)
                gcols = mats[gi].T @ gg
                gxp = _col2im(gcols, cpg, kh, kw, h, wd)
                gx_parts.append(gxp[:, :, ph : ph + h, pw : pw + wd])
            gx = np.concatenate(gx_parts, axis=1)
            gb = g.sum(axis=(0, 2, 3)).reshape(c_out, 1, 1, 1)
            return gx, gk, gb

    result = Tensor._wrap(out.astype(x.dtype, copy=False))
    autograd.push(result, (x, w.kernel, w.bias), vjp)
    return result


def strip_pair_conv(x: Tensor, w_row: ConvWeights, w_col: ConvWeights) -> Tensor:
    """Depthwise 1xK conv followed by depthwise Kx1 conv."""
    for name, cw, want in (("w_row", w_row, 0), ("w_col", w_col, 1)):
        if not cw.is_depthwise:
            raise ShapeError(f"strip_pair_conv: {name} must be depthwise")
        if cw.kernel.shape[2 + want] != 1:
            raise ShapeError(f"strip_pair_conv: {name} has wrong orientation {cw.kernel.shape}")
    return conv2d(conv2d(x, w_row), w_col)


def _bins(size: int, out: int) -> list[tuple[int, int]]:
    return [((i * size) // out, -((-(i + 1) * size) // out)) for i in range(out)]


def adaptive_max_pool(x: Tensor, factor: int) -> Tensor:
    """Max pool to (floor(h/factor), floor(w/factor)) adaptive bins, at least 1x1.

    Gradient flows to the first maximal element of each bin.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    n, c, h, w = x.shape
    oh, ow = max(1, h // factor), max(1, w // factor)
    rows, cols = _bins(h, oh), _bins(w, ow)
    out = np.empty((n, c, oh, ow), dtype=x.dtype)
    argmax = np.empty((n, c, oh, ow, 2), dtype=np.intp)
    for i, (r0, r1) in enumerate(rows):
        for j, (c0, c1) in enumerate(cols):
            block = x.data[:, :, r0:r1, c0:c1].reshape(n, c, -1)
            idx = block.argmax(axis=2)
            out[:, :, i, j] = np.take_along_axis(block, idx[..., None], axis=2)[..., 0]
            argmax[:, :, i, j, 0] = r0 + idx // (c1 - c0)
            argmax[:, :, i, j, 1] = c0 + idx % (c1 - c0)

    def vjp(g):
        gx = np.zeros_like(x.data)
        ni, ci = np.meshgrid(np.arange(n), np.arange(c), indexing="ij")
        for i in range(oh):
            for j in range(ow):
                np.add.at(
                    gx, (ni, ci, argmax[:, :, i, j, 0], argmax[:, :, i, j, 1]), g[:, :, i, j]
                )
        return (gx,)

    result = Tensor._wrap(out)
    autograd.push(result, (x,), vjp)
    return result


def global_avg_pool(x: Tensor) -> Tensor:
    n, c, h, w = x.shape
    out = Tensor._wrap(x.data.mean(axis=(2, 3), keepdims=True, dtype=x.dtype))
    autograd.push(
        out, (x,), lambda g: (np.broadcast_to(g / x.dtype.type(h * w), x.shape).copy(),)
    )
    return out


def bilinear_matrix(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) interpolation weights, half-pixel centres, clamped borders."""
    m = np.zeros((n_out, n_in), dtype=np.float64)
    ratio = n_in / n_out
    for d in range(n_out):
        src = max((d + 0.5) * ratio - 0.5, 0.0)
        i0 = min(int(math.floor(src)), n_in - 1)
        i1 = min(i0 + 1, n_in - 1)
        lam = src - i0 if i1 != i0 else 0.0
        m[d, i0] += 1.0 - lam
        m[d, i1] += lam
    return m


def bilinear_upsample(x: Tensor, out_h: int, out_w: int) -> Tensor:
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")
    _, _, h, w = x.shape
    ah = bilinear_matrix(h, out_h).astype(x.dtype)
    aw = bilinear_matrix(w, out_w).astype(x.dtype)
    out = Tensor._wrap(ah @ (x.data @ aw.T))
    autograd.push(out, (x,), lambda g: (ah.T @ (g @ aw),))
    return out


def _shuffle(a: np.ndarray, s: int) -> np.ndarray:
    n, c, h, w = a.shape
    return (
        a.reshape(n, c // (s * s), s, s, h, w)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(n, c // (s * s), h * s, w * s)
    )


def _unshuffle(a: np.ndarray, s: int) -> np.ndarray:
    n, c, h, w = a.shape
    return (
        a.reshape(n, c, h // s, s, w // s, s)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(n, c * s * s, h // s, w // s)
    )


def pixel_shuffle(x: Tensor, s: int) -> Tensor:
    """(n, c*s^2, h, w) -> (n, c, h*s, w*s)."""
    if s < 1 or x.shape[1] % (s * s):
        raise ShapeError(f"pixel_shuffle: {x.shape[1]} channels not divisible by {s}^2")
    out = Tensor._wrap(_shuffle(x.data, s))
    autograd.push(out, (x,), lambda g: (_unshuffle(g, s),))
    return out


def pixel_unshuffle(x: Tensor, s: int) -> Tensor:
    """Space-to-depth; the inverse of :func:`pixel_shuffle`."""
    if s < 1 or x.shape[2] % s or x.shape[3] % s:
        raise ShapeError(f"pixel_unshuffle: spatial {x.shape[2:]} not divisible by {s}")
    out = Tensor._wrap(_unshuffle(x.data, s))
    autograd.push(out, (x,), lambda g: (_shuffle(g, s),))
    return out


def sigmoid(x: Tensor) -> Tensor:
    half = x.dtype.type(0.5)
    s = half * (1 + np.tanh(half * x.data))
    out = Tensor._wrap(s)
    autograd.push(out, (x,), lambda g: (g * s * (1 - s),))
    return out


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(x: Tensor) -> Tensor:
    """tanh-approximated GELU."""
    a = x.data
    c = x.dtype.type(_GELU_C)
    k = x.dtype.type(0.044715)
    half = x.dtype.type(0.5)
    a2 = a * a
    t = np.tanh(c * a * (1 + k * a2))
    out = Tensor._wrap(half * a * (1 + t))

    def vjp(g):
        d = half * (1 + t) + half * a * (1 - t * t) * c * (1 + 3 * k * a2)
        return (g * d,)

    autograd.push(out, (x,), vjp)
    return out
