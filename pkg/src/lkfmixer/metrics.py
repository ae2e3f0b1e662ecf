"""PSNR and SSIM on the luma channel with border shaving."""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .imaging import PlanarImage, rgb_to_y

PSNR_CAP = 100.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def _shave(plane: np.ndarray, shave: int) -> np.ndarray:
    h, w = plane.shape
    if shave < 0 or 2 * shave >= min(h, w):
        raise ValueError(f"shave {shave} too large for a {w}x{h} plane")
    return plane[shave : h - shave, shave : w - shave] if shave else plane


def _pair(a: np.ndarray, b: np.ndarray, shave: int) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return _shave(a, shave), _shave(b, shave)


def psnr(a: np.ndarray, b: np.ndarray, shave: int = 0, peak: float = 255.0) -> float:
    a, b = _pair(a, b, shave)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(peak * peak / mse))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x * x) / (2 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def _filter_valid(x: np.ndarray, win: np.ndarray) -> np.ndarray:
    k = win.shape[0]
    return np.tensordot(sliding_window_view(x, (k, k)), win, axes=([2, 3], [0, 1]))


def ssim(a: np.ndarray, b: np.ndarray, shave: int = 0, peak: float = 255.0) -> float:
    """Mean SSIM over all fully-covered 11x11 Gaussian windows."""
    a, b = _pair(a, b, shave)
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"plane {a.shape} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    win = gaussian_window()
    mu_a = _filter_valid(a, win)
    mu_b = _filter_valid(b, win)
    var_a = _filter_valid(a * a, win) - mu_a**2
    var_b = _filter_valid(b * b, win) - mu_b**2
    cov = _filter_valid(a * b, win) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def psnr_y(a: PlanarImage, b: PlanarImage, shave: int = 0) -> float:
    return psnr(rgb_to_y(a), rgb_to_y(b), shave)


def ssim_y(a: PlanarImage, b: PlanarImage, shave: int = 0) -> float:
    return ssim(rgb_to_y(a), rgb_to_y(b), shave)
