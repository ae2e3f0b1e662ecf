"""The LKFMixer network: blocks, parameter naming and initialization.

Parameter names follow a fixed dotted grammar, e.g. ``fmb0.fdb.ffb2.plkb.row.w``;
indices are 0-based. Weights are (c_out, c_in/groups, kh, kw) and biases
(c_out, 1, 1, 1).
"""

from __future__ import annotations

import math
from collections.abc import MutableMapping
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from . import ops
from .ops import ConvWeights
from .tensor import (
    ShapeError,
    Tensor,
    concat_channels,
    elementwise_add,
    elementwise_mul,
    one_minus,
    split_channels,
)

ACTIVATIONS = ("gelu", "identity")


@dataclass(frozen=True)
class ModelConfig:
    channels: int = 40
    n_fmb: int = 6
    scale: int = 4
    alpha: float = 0.25
    kernel: int = 31
    distill_width: int | None = None
    pool_factor: int = 8
    activation: str = "gelu"

    def __post_init__(self) -> None:
        if self.channels < 1 or self.n_fmb < 1:
            raise ValueError("channels and n_fmb must be positive")
        if self.scale not in (2, 3, 4):
            raise ValueError(f"scale must be 2, 3 or 4, got {self.scale}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError(f"kernel must be a positive odd integer, got {self.kernel}")
        if self.distill_width is not None and not 1 <= self.distill_width <= self.channels:
            raise ValueError(f"distill_width must be in [1, {self.channels}]")
        if self.pool_factor < 1:
            raise ValueError("pool_factor must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")

    @property
    def d(self) -> int:
        return self.distill_width if self.distill_width is not None else self.channels // 2

    @property
    def split(self) -> int:
        """Channel count that goes through the large-kernel strips (round half up, >= 1)."""
        return min(self.channels, max(1, math.floor(self.alpha * self.channels + 0.5)))


PRESETS = {
    "T": dict(channels=40, n_fmb=6),
    "B": dict(channels=48, n_fmb=8),
    "L": dict(channels=64, n_fmb=12),
}


def preset(variant: str, scale: int = 4, **overrides) -> ModelConfig:
    try:
        base = PRESETS[variant.upper()]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}; expected one of T, B, L") from None
    return ModelConfig(scale=scale, **{**base, **overrides})


class ParamStore(MutableMapping):
    """Name -> Tensor map that always iterates in lexicographic order."""

    def __init__(self, items=None) -> None:
        self._d: dict[str, Tensor] = {}
        if items:
            for k, v in dict(items).items():
                self[k] = v

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self._d[name]
        except KeyError:
            raise KeyError(f"missing parameter {name!r}") from None

    def __setitem__(self, name: str, value: Tensor) -> None:
        if not isinstance(value, Tensor):
            raise TypeError(f"{name}: expected Tensor, got {type(value).__name__}")
        self._d[name] = value

    def __delitem__(self, name: str) -> None:
        del self._d[name]

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._d))

    def __len__(self) -> int:
        return len(self._d)

    def __repr__(self) -> str:
        return f"ParamStore({len(self)} tensors, {self.num_elements()} elements)"

    def num_elements(self) -> int:
        return sum(t.size for t in self._d.values())

    def astype(self, dtype) -> "ParamStore":
        return ParamStore({k: v.astype(dtype) for k, v in self.items()})

    def scope(self, prefix: str) -> "Scope":
        return Scope(self, prefix)


@dataclass(frozen=True)
class Scope:
    store: ParamStore
    prefix: str

    def __getitem__(self, name: str) -> Tensor:
        return self.store[f"{self.prefix}.{name}"]

    def scope(self, sub: str) -> "Scope":
        return Scope(self.store, f"{self.prefix}.{sub}")

    def conv(self, name: str, groups: int = 1) -> ConvWeights:
        return ConvWeights(self[f"{name}.w"], self[f"{name}.b"], groups)

    def depthwise(self, name: str) -> ConvWeights:
        kernel = self[f"{name}.w"]
        return ConvWeights(kernel, self[f"{name}.b"], kernel.shape[0])


def _as_scope(params) -> Scope:
    if isinstance(params, Scope):
        return params
    raise TypeError("block forwards take a Scope; use store.scope(prefix)")


# -- parameter layout -------------------------------------------------------


def _plkb_shapes(prefix: str, cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    a, C, K = cfg.split, cfg.channels, cfg.kernel
    return {
        f"{prefix}.row": (a, 1, 1, K),
        f"{prefix}.col": (a, 1, K, 1),
        f"{prefix}.fuse": (C, C, 1, 1),
    }


def conv_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Kernel shape of every conv layer, keyed by layer name (without .w/.b)."""
    C, d, s = cfg.channels, cfg.d, cfg.scale
    shapes: dict[str, tuple[int, ...]] = {"shallow": (C, 3, 3, 3)}
    for i in range(cfg.n_fmb):
        fdb = f"fmb{i}.fdb"
        for j in range(3):
            ffb = f"{fdb}.ffb{j}"
            shapes[f"{ffb}.dw3"] = (C, 1, 3, 3)
            shapes.update(_plkb_shapes(f"{ffb}.plkb", cfg))
            shapes[f"{ffb}.fuse"] = (C, C, 1, 1)
            shapes[f"{fdb}.distill{j}"] = (d, C, 1, 1)
        shapes[f"{fdb}.fuse"] = (C, 3 * d + C, 1, 1)
        sfmb = f"fmb{i}.sfmb"
        shapes.update(_plkb_shapes(f"{sfmb}.plkb", cfg))
        shapes[f"{sfmb}.spatial"] = (C, C, 1, 1)
        shapes[f"{sfmb}.fuse"] = (C, C, 1, 1)
        fsb = f"fmb{i}.fsb"
        shapes.update(_plkb_shapes(f"{fsb}.plkb", cfg))
        shapes[f"{fsb}.dw3"] = (C, 1, 3, 3)
        shapes[f"{fsb}.gate"] = (C, 2 * C, 1, 1)
    shapes["up"] = (3 * s * s, C, 3, 3)
    return shapes


def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    out = {}
    for layer, shape in conv_shapes(cfg).items():
        out[f"{layer}.w"] = shape
        out[f"{layer}.b"] = (shape[0], 1, 1, 1)
    return dict(sorted(out.items()))


def init_params(cfg: ModelConfig, seed: int = 0, dtype=np.float32) -> ParamStore:
    """Uniform(+-sqrt(6 / fan_in)) weights, zero biases, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    store = ParamStore()
    for name, shape in param_shapes(cfg).items():
        if name.endswith(".b"):
            store[name] = Tensor(np.zeros(shape), dtype=dtype)
        else:
            fan_in = shape[1] * shape[2] * shape[3]
            bound = math.sqrt(6.0 / fan_in)
            store[name] = Tensor(rng.uniform(-bound, bound, size=shape), dtype=dtype)
    return store


def check_params(store: ParamStore, cfg: ModelConfig) -> None:
    """Raise ShapeError naming the first parameter that does not fit ``cfg``."""
    want = param_shapes(cfg)
    for name in sorted(set(want) | set(store)):
        if name not in store:
            raise ShapeError(f"{name}: missing from parameter store")
        if name not in want:
            raise ShapeError(f"{name}: not a parameter of this configuration")
        if store[name].shape != want[name]:
            raise ShapeError(f"{name}: shape {store[name].shape}, expected {want[name]}")


# -- blocks -------------------------------------------------------------------


def _act(x: Tensor, cfg: ModelConfig) -> Tensor:
    return ops.gelu(x) if cfg.activation == "gelu" else x


def _need_channels(x: Tensor, cfg: ModelConfig, block: str) -> None:
    if x.shape[1] != cfg.channels:
        raise ShapeError(f"{block}: input has {x.shape[1]} channels, config says {cfg.channels}")


def forward_plkb(x: Tensor, params: Scope, cfg: ModelConfig) -> Tensor:
    _need_channels(x, cfg, "PLKB")
    p = _as_scope(params)
    a = cfg.split
    if a == cfg.channels:
        mixed = ops.strip_pair_conv(x, p.depthwise("row"), p.depthwise("col"))
    else:
        head, rest = split_channels(x, a)
        head = ops.strip_pair_conv(head, p.depthwise("row"), p.depthwise("col"))
        mixed = concat_channels([head, rest])
    return ops.conv2d(mixed, p.conv("fuse"))


def forward_ffb(x: Tensor, params: Scope, cfg: ModelConfig) -> Tensor:
    p = _as_scope(params)
    local = ops.conv2d(x, p.depthwise("dw3"))
    wide = forward_plkb(x, p.scope("plkb"), cfg)
    return _act(ops.conv2d(elementwise_add(local, wide), p.conv("fuse")), cfg)


def forward_fdb(x: Tensor, params: Scope, cfg: ModelConfig) -> Tensor:
    _need_channels(x, cfg, "FDB")
    p = _as_scope(params)
    refined = x
    distilled = []
    for j in range(3):
        distilled.append(ops.conv2d(refined, p.conv(f"distill{j}")))
        refined = forward_ffb(refined, p.scope(f"ffb{j}"), cfg)
    merged = concat_channels(distilled + [refined])
    return _act(ops.conv2d(merged, p.conv("fuse")), cfg)


def spatial_branch(x: Tensor, params: Scope, cfg: ModelConfig) -> Tensor:
    p = _as_scope(params)
    _, _, h, w = x.shape
    pooled = ops.adaptive_max_pool(x, cfg.pool_factor)
    up = ops.bilinear_upsample(ops.conv2d(pooled, p.conv("spatial")), h, w)
    gate = ops.sigmoid(ops.global_avg_pool(x))
    return elementwise_mul(up, gate)


def forward_sfmb(x: Tensor, params: Scope, cfg: ModelConfig) -> Tensor:
    _need_channels(x, cfg, "SFMB")
    p = _as_scope(params)
    fused = elementwise_add(forward_plkb(x, p.scope("plkb"), cfg), spatial_branch(x, p, cfg))
    return _act(ops.conv2d(fused, p.conv("fuse")), cfg)


def forward_fsb(x: Tensor, params: Scope, cfg: ModelConfig) -> Tensor:
    _need_channels(x, cfg, "FSB")
    p = _as_scope(params)
    wide = forward_plkb(x, p.scope("plkb"), cfg)
    local = ops.conv2d(x, p.depthwise("dw3"))
    beta = ops.sigmoid(ops.conv2d(concat_channels([wide, local]), p.conv("gate")))
    return elementwise_add(elementwise_mul(local, beta), elementwise_mul(wide, one_minus(beta)))


def forward_fmb(x: Tensor, params: Scope, cfg: ModelConfig) -> Tensor:
    p = _as_scope(params)
    x = forward_fdb(x, p.scope("fdb"), cfg)
    x = forward_sfmb(x, p.scope("sfmb"), cfg)
    return forward_fsb(x, p.scope("fsb"), cfg)


def forward_model(lr_image: Tensor, params: ParamStore, cfg: ModelConfig) -> Tensor:
    """(n, 3, h, w) in [0, 1] -> (n, 3, s*h, s*w). The output is not clamped."""
    if lr_image.shape[1] != 3:
        raise ShapeError(f"model expects 3 input channels, got {lr_image.shape[1]}")
    shallow = ops.conv2d(lr_image, ConvWeights(params["shallow.w"], params["shallow.b"]))
    x = shallow
    for i in range(cfg.n_fmb):
        x = forward_fmb(x, params.scope(f"fmb{i}"), cfg)
    x = elementwise_add(x, shallow)
    x = ops.conv2d(x, ConvWeights(params["up.w"], params["up.b"]))
    return ops.pixel_shuffle(x, cfg.scale)


@dataclass(frozen=True)
class Model:
    """Config plus parameters; a convenience callable over :func:`forward_model`."""

    cfg: ModelConfig
    params: ParamStore = field(repr=False)

    def __call__(self, x: Tensor) -> Tensor:
        return forward_model(x, self.params, self.cfg)

    def with_params(self, params: ParamStore) -> "Model":
        return replace(self, params=params)
