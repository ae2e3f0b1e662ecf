"""8-bit RGB images, PNG I/O, luma conversion and bicubic resampling."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from PIL import Image, UnidentifiedImageError

from .tensor import Tensor


class ImageFormatError(ValueError):
    """The file is not a readable PNG."""


class UnsupportedBitDepthError(ImageFormatError):
    pass


class AlphaChannelError(ImageFormatError):
    pass


@dataclass(frozen=True, eq=False)
class PlanarImage:
    """Three uint8 planes stored as a (3, height, width) array."""

    pixels: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PlanarImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        p = self.pixels
        if p.dtype != np.uint8 or p.ndim != 3 or p.shape[0] != 3:
            raise ValueError(f"expected (3, h, w) uint8 planes, got {p.dtype} {p.shape}")
        p.flags.writeable = False

    @property
    def height(self) -> int:
        return self.pixels.shape[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[2]

    def to_float(self) -> np.ndarray:
        return self.pixels.astype(np.float64) / 255.0

    def to_tensor(self, dtype=np.float32) -> Tensor:
        return Tensor(self.to_float()[None], dtype=dtype)

    def crop(self, height: int, width: int) -> "PlanarImage":
        return PlanarImage(self.pixels[:, :height, :width].copy())

    @classmethod
    def from_float(cls, planes: np.ndarray) -> "PlanarImage":
        return cls(quantize(planes))

    @classmethod
    def from_tensor(cls, t: Tensor, index: int = 0) -> "PlanarImage":
        return cls.from_float(t.data[index])


def quantize(values: np.ndarray) -> np.ndarray:
    """[0, 1] floats to uint8: clamp, then round half up of 255 * v."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def load_png(path: str | os.PathLike) -> PlanarImage:
    try:
        with Image.open(path) as im:
            if im.format != "PNG":
                raise ImageFormatError(f"{path}: not a PNG file ({im.format})")
            mode = im.mode
            if mode in ("RGBA", "LA", "PA", "La", "RGBa") or "transparency" in im.info:
                raise AlphaChannelError(f"{path}: images with alpha are not supported")
            if mode == "P":
                im = im.convert("RGB")
            elif mode not in ("RGB", "L"):
                raise UnsupportedBitDepthError(f"{path}: unsupported PNG mode {mode!r}")
            arr = np.asarray(im)
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageFormatError(f"{path}: malformed PNG ({exc})") from None
    if arr.ndim == 2:
        arr = np.repeat(arr[None], 3, axis=0)
    else:
        arr = arr.transpose(2, 0, 1)
    return PlanarImage(np.ascontiguousarray(arr, dtype=np.uint8))


def save_png(image: PlanarImage, path: str | os.PathLike) -> None:
    Image.fromarray(np.ascontiguousarray(image.pixels.transpose(1, 2, 0)), "RGB").save(
        path, format="PNG"
    )


def rgb_to_y(image: PlanarImage) -> np.ndarray:
    """BT.601 limited-range luma on the 0-255 scale (16 for black, 235 for white)."""
    r, g, b = image.to_float()
    return 16.0 + 65.481 * r + 128.553 * g + 24.966 * b


def cubic(x: np.ndarray, a: float = -0.5) -> np.ndarray:
    """Keys cubic convolution kernel."""
    ax = np.abs(x)
    ax2, ax3 = ax * ax, ax * ax * ax
    near = (a + 2) * ax3 - (a + 3) * ax2 + 1
    far = a * ax3 - 5 * a * ax2 + 8 * a * ax - 4 * a
    return np.where(ax <= 1, near, np.where(ax < 2, far, 0.0))


@lru_cache(maxsize=128)
def resize_weights(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) bicubic weight matrix with antialiasing on downscale."""
    scale = n_out / n_in
    width = 4.0
    kernel_scale = 1.0
    if scale < 1:
        width /= scale
        kernel_scale = scale
    m = np.zeros((n_out, n_in), dtype=np.float64)
    for d in range(n_out):
        centre = (d + 0.5) / scale - 0.5  # source coordinate, 0-based
        left = math.floor(centre - width / 2)
        taps = np.arange(left, left + int(math.ceil(width)) + 2)
        w = kernel_scale * cubic(kernel_scale * (centre - taps))
        w /= w.sum()
        for t, wt in zip(np.clip(taps, 0, n_in - 1), w):
            m[d, t] += wt
    return m


def bicubic_resize(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a 2-D (or leading-axis-batched) float plane."""
    plane = np.asarray(plane, dtype=np.float64)
    h, w = plane.shape[-2:]
    rows = resize_weights(h, out_h)
    cols = resize_weights(w, out_w)
    return rows @ plane @ cols.T


def resize_image(image: PlanarImage, out_h: int, out_w: int) -> PlanarImage:
    return PlanarImage.from_float(bicubic_resize(image.to_float(), out_h, out_w))


def degrade(hr: PlanarImage, scale: int) -> PlanarImage:
    """Bicubic LR counterpart; HR is first cropped to a multiple of ``scale``."""
    h, w = hr.height // scale, hr.width // scale
    if h < 1 or w < 1:
        raise ValueError(f"image {hr.width}x{hr.height} is too small for scale {scale}")
    cropped = hr.crop(h * scale, w * scale)
    return resize_image(cropped, h, w)
