"""Dense 4-D tensors in (batch, channel, row, col) layout and their basic algebra."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import autograd

DTYPES = (np.float32, np.float64)


class ShapeError(ValueError):
    pass


class Tensor:
    """Immutable row-major 4-D float array.

    float32 is the working precision; float64 exists for gradient checking.
    The backing array is marked read-only so no op can mutate its inputs.
    """

    __slots__ = ("data",)

    def __init__(self, data, dtype=None) -> None:
        if isinstance(data, Tensor):
            data = data.data
        arr = np.array(data, dtype=np.float32 if dtype is None else dtype, copy=True)
        if arr.dtype not in DTYPES:
            raise TypeError(f"unsupported tensor dtype {arr.dtype}")
        if arr.ndim != 4:
            raise ShapeError(f"Tensor must be 4-D (n, c, h, w), got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ShapeError(f"all dimensions must be >= 1, got {arr.shape}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self.data = arr

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Tensor":
        # trusted fast path for op outputs: arr is fresh and already 4-D
        t = object.__new__(cls)
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        t.data = arr
        return t

    @classmethod
    def zeros(cls, shape: Sequence[int], dtype=np.float32) -> "Tensor":
        return cls(np.zeros(shape, dtype=dtype))

    @classmethod
    def ones(cls, shape: Sequence[int], dtype=np.float32) -> "Tensor":
        return cls(np.ones(shape, dtype=dtype))

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def flat_index(self, n: int, c: int, h: int, w: int) -> int:
        _, C, H, W = self.shape
        return ((n * C + c) * H + h) * W + w

    def __getitem__(self, idx: tuple[int, int, int, int]) -> float:
        return float(self.data.reshape(-1)[self.flat_index(*idx)])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def astype(self, dtype) -> "Tensor":
        return Tensor(self.data.astype(dtype))

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype})"

    def __eq__(self, other: object) -> bool:  # bitwise equality
        if not isinstance(other, Tensor):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.dtype == other.dtype
            and self.data.tobytes() == other.data.tobytes()
        )

    __hash__ = None  # type: ignore[assignment]


def _check_same(a: Tensor, b: Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


def elementwise_add(a: Tensor, b: Tensor) -> Tensor:
    _check_same(a, b, "elementwise_add")
    out = Tensor._wrap(a.data + b.data)
    autograd.push(out, (a, b), lambda g: (g, g))
    return out


def elementwise_sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same(a, b, "elementwise_sub")
    out = Tensor._wrap(a.data - b.data)
    autograd.push(out, (a, b), lambda g: (g, -g))
    return out


def elementwise_mul(a: Tensor, b: Tensor) -> Tensor:
    """a * b, where b may also be an (n, c, 1, 1) gate broadcast over rows and cols."""
    n, c, _, _ = a.shape
    broadcast = b.shape != a.shape
    if broadcast and b.shape != (n, c, 1, 1):
        raise ShapeError(f"elementwise_mul: cannot combine {a.shape} with {b.shape}")
    out = Tensor._wrap(a.data * b.data)

    def vjp(g):
        ga = g * b.data
        gb = g * a.data
        if broadcast:
            gb = gb.sum(axis=(2, 3), keepdims=True)
        return ga, gb

    autograd.push(out, (a, b), vjp)
    return out


def one_minus(x: Tensor) -> Tensor:
    out = Tensor._wrap(1 - x.data)
    autograd.push(out, (x,), lambda g: (-g,))
    return out


def scale(x: Tensor, k: float) -> Tensor:
    out = Tensor._wrap(x.data * x.dtype.type(k))
    autograd.push(out, (x,), lambda g: (g * x.dtype.type(k),))
    return out


def reduce_sum(x: Tensor) -> Tensor:
    """Sum of every element, as a (1, 1, 1, 1) tensor."""
    out = Tensor._wrap(x.data.sum(dtype=x.dtype).reshape(1, 1, 1, 1))
    autograd.push(out, (x,), lambda g: (np.broadcast_to(g.reshape(()), x.shape).copy(),))
    return out


def concat_channels(parts: Sequence[Tensor]) -> Tensor:
    if not parts:
        raise ShapeError("concat_channels needs at least one part")
    n, _, h, w = parts[0].shape
    for p in parts[1:]:
        if (p.shape[0], p.shape[2], p.shape[3]) != (n, h, w):
            raise ShapeError(
                f"concat_channels: batch/spatial mismatch {parts[0].shape} vs {p.shape}"
            )
    out = Tensor._wrap(np.concatenate([p.data for p in parts], axis=1))
    bounds = np.cumsum([0] + [p.shape[1] for p in parts])

    def vjp(g):
        return tuple(g[:, bounds[i] : bounds[i + 1]] for i in range(len(parts)))

    autograd.push(out, tuple(parts), vjp)
    return out


def split_channels(x: Tensor, at: int) -> tuple[Tensor, Tensor]:
    c = x.shape[1]
    if not 0 < at < c:
        raise ShapeError(f"split_channels: split point {at} outside (0, {c})")
    first = Tensor._wrap(x.data[:, :at].copy())
    second = Tensor._wrap(x.data[:, at:].copy())

    def vjp_first(g):
        full = np.zeros_like(x.data)
        full[:, :at] = g
        return (full,)

    def vjp_second(g):
        full = np.zeros_like(x.data)
        full[:, at:] = g
        return (full,)

    autograd.push(first, (x,), vjp_first)
    autograd.push(second, (x,), vjp_second)
    return first, second
