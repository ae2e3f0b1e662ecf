"""Toy-scale training: patch sampling with augmentation, L1 + FFT loss, Adam, cosine lr."""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autograd
from .imaging import PlanarImage, degrade
from .losses import training_loss
from .model import ModelConfig, ParamStore, forward_model, init_params
from .optim import AdamState, adam_step, cosine_lr
from .tensor import Tensor

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    total_iters: int = 200
    batch: int = 4
    lr_patch: int = 48
    lr_init: float = 1e-3
    lr_min: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    fft_weight: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.lr_init >= self.lr_min > 0:
            raise ValueError("need lr_init >= lr_min > 0")
        if self.total_iters < 1 or self.batch < 1 or self.lr_patch < 1:
            raise ValueError("total_iters, batch and lr_patch must be positive")


@dataclass(frozen=True)
class Pair:
    """An LR/HR training pair as float (3, h, w) arrays in [0, 1]."""

    lr: np.ndarray
    hr: np.ndarray

    @classmethod
    def from_images(cls, lr: PlanarImage, hr: PlanarImage) -> "Pair":
        return cls(lr.to_float(), hr.to_float())


@dataclass(frozen=True)
class Augmentation:
    hflip: bool
    vflip: bool
    rot90: int  # quarter turns, 0..3

    def apply(self, planes: np.ndarray) -> np.ndarray:
        if self.hflip:
            planes = planes[:, :, ::-1]
        if self.vflip:
            planes = planes[:, ::-1, :]
        if self.rot90:
            planes = np.rot90(planes, self.rot90, axes=(1, 2))
        return np.ascontiguousarray(planes)


def draw_augmentation(rng: np.random.Generator) -> Augmentation:
    hflip, vflip = rng.random(2) < 0.5
    return Augmentation(bool(hflip), bool(vflip), int(rng.integers(4)))


def sample_batch(
    dataset: Sequence[Pair], batch: int, lr_patch: int, scale: int, rng: np.random.Generator
) -> tuple[Tensor, Tensor]:
    """Aligned random crops with a shared flip/rotation per pair."""
    lr_out, hr_out = [], []
    hp = lr_patch * scale
    for _ in range(batch):
        pair = dataset[int(rng.integers(len(dataset)))]
        _, h, w = pair.lr.shape
        if pair.hr.shape[1:] != (h * scale, w * scale):
            raise ValueError(f"HR {pair.hr.shape[1:]} is not {scale}x LR {(h, w)}")
        if h < lr_patch or w < lr_patch:
            raise ValueError(f"LR image {w}x{h} smaller than patch {lr_patch}")
        y = int(rng.integers(h - lr_patch + 1))
        x = int(rng.integers(w - lr_patch + 1))
        aug = draw_augmentation(rng)
        lr_out.append(aug.apply(pair.lr[:, y : y + lr_patch, x : x + lr_patch]))
        hr_out.append(aug.apply(pair.hr[:, y * scale : y * scale + hp, x * scale : x * scale + hp]))
    return Tensor(np.stack(lr_out)), Tensor(np.stack(hr_out))


@dataclass
class TrainResult:
    params: ParamStore
    history: list[dict]


def train_toy(
    cfg: ModelConfig,
    tcfg: TrainConfig,
    dataset: Sequence[Pair],
    params: ParamStore | None = None,
) -> TrainResult:
    if not dataset:
        raise ValueError("training needs at least one image pair")
    params = params if params is not None else init_params(cfg, tcfg.seed)
    state = AdamState(tcfg.beta1, tcfg.beta2, tcfg.eps)
    last = tcfg.total_iters - 1
    history = []
    for it in range(tcfg.total_iters):
        rng = np.random.default_rng([tcfg.seed, it])
        lr_b, hr_b = sample_batch(dataset, tcfg.batch, tcfg.lr_patch, cfg.scale, rng)
        with autograd.record() as tape:
            pred = forward_model(lr_b, params, cfg)
            total, l1, ff = training_loss(pred, hr_b, tcfg.fft_weight)
        grads = autograd.backward(total, tape, params)
        lr = cosine_lr(it, last, tcfg.lr_init, tcfg.lr_min)
        params = adam_step(params, grads, state, it + 1, lr)
        history.append(
            {"iter": it, "lr": lr, "l1": l1.item(), "fft": ff.item(), "total": total.item()}
        )
        if it % 20 == 0 or it == last:
            log.info("iter %d lr %.3g loss %.5f", it, lr, total.item())
    return TrainResult(params, history)


def write_loss_csv(history: list[dict], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=["iter", "lr", "l1", "fft", "total"])
        w.writeheader()
        for row in history:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def synthetic_images(count: int, size: int, seed: int = 0) -> list[PlanarImage]:
    """Smooth random images: sums of oriented sinusoids plus a few soft edges."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / size
    images = []
    for _ in range(count):
        planes = np.zeros((3, size, size))
        for c in range(3):
            acc = np.full((size, size), rng.uniform(0.3, 0.7))
            for _ in range(4):
                fx, fy = rng.uniform(-6, 6, size=2)
                acc += rng.uniform(0.05, 0.15) * np.sin(2 * np.pi * (fx * xx + fy * yy) + rng.uniform(0, 6.3))
            edge = rng.uniform(0.2, 0.8)
            acc += 0.15 * np.tanh((xx - edge) * 40) * rng.choice([-1, 1])
            planes[c] = acc
        images.append(PlanarImage.from_float(planes))
    return images


def synthetic_dataset(count: int, hr_size: int, scale: int, seed: int = 0) -> list[Pair]:
    return [Pair.from_images(degrade(hr, scale), hr) for hr in synthetic_images(count, hr_size, seed)]
