"""Closed-form parameter and multiply-accumulate accounting.

Layers are enumerated here from the block structure rather than read off a
parameter store, so the two can be cross-checked. MACs count each
multiply-accumulate of a convolution once and ignore bias additions; pooling,
interpolation, activations and elementwise arithmetic are tallied separately
and kept out of the headline total.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .model import ModelConfig


@dataclass(frozen=True)
class LayerCount:
    name: str
    params: int
    macs: int
    biases: int = 0

    @property
    def weights(self) -> int:
        return self.params - self.biases


@dataclass(frozen=True)
class ComplexityReport:
    entries: tuple[LayerCount, ...]
    hr_size: tuple[int, int] | None = None
    aux: tuple[LayerCount, ...] = field(default=())

    @property
    def params(self) -> int:
        return sum(e.params for e in self.entries)

    @property
    def macs(self) -> int:
        return sum(e.macs for e in self.entries)

    @property
    def weights(self) -> int:
        return sum(e.weights for e in self.entries)

    def layer(self, name: str) -> LayerCount:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def aux_ops(self) -> int:
        return sum(e.macs for e in self.aux)

    def render_text(self) -> str:
        width = max([len(e.name) for e in self.entries + self.aux] + [5])
        lines = [f"{'layer':<{width}}  {'params':>10}  {'macs':>16}"]
        for e in self.entries:
            lines.append(f"{e.name:<{width}}  {e.params:>10,}  {e.macs:>16,}")
        lines.append("-" * (width + 30))
        lines.append(f"{'total':<{width}}  {self.params:>10,}  {self.macs:>16,}")
        if self.aux:
            lines.append("")
            lines.append("not counted in total (non-conv ops):")
            for e in self.aux:
                lines.append(f"{e.name:<{width}}  {'':>10}  {e.macs:>16,}")
        if self.hr_size:
            h, w = self.hr_size
            lines.append("")
            lines.append(
                f"params {self.params / 1e3:.1f}K   macs {self.macs / 1e9:.2f}G @ {w}x{h} HR"
            )
        return "\n".join(lines)

    def to_json_lines(self) -> str:
        rows = [{"name": e.name, "params": e.params, "macs": e.macs} for e in self.entries]
        rows += [{"name": e.name, "params": 0, "macs": e.macs, "aux": True} for e in self.aux]
        rows.append({"name": "total", "params": self.params, "macs": self.macs})
        return "\n".join(json.dumps(r) for r in rows)


@dataclass(frozen=True)
class _Conv:
    name: str
    c_out: int
    c_in_per_group: int
    kh: int
    kw: int
    pooled: bool = False  # evaluated at the max-pooled resolution

    @property
    def params(self) -> int:
        return self.c_out * self.c_in_per_group * self.kh * self.kw + self.c_out

    def macs(self, h: int, w: int) -> int:
        return conv_macs(self.c_out, self.c_in_per_group, self.kh, self.kw, h, w)


def conv_macs(c_out: int, c_in_per_group: int, kh: int, kw: int, h: int, w: int) -> int:
    """Multiply-accumulates of one stride-1 same-padded conv at h x w output."""
    return c_out * c_in_per_group * kh * kw * h * w


def _plkb(prefix: str, cfg: ModelConfig) -> list[_Conv]:
    a, C, K = cfg.split, cfg.channels, cfg.kernel
    return [
        _Conv(f"{prefix}.row", a, 1, 1, K),
        _Conv(f"{prefix}.col", a, 1, K, 1),
        _Conv(f"{prefix}.fuse", C, C, 1, 1),
    ]


def _convs(cfg: ModelConfig) -> list[_Conv]:
    C, d, s = cfg.channels, cfg.d, cfg.scale
    layers = [_Conv("shallow", C, 3, 3, 3)]
    for i in range(cfg.n_fmb):
        fdb = f"fmb{i}.fdb"
        for j in range(3):
            layers.append(_Conv(f"{fdb}.distill{j}", d, C, 1, 1))
            layers.append(_Conv(f"{fdb}.ffb{j}.dw3", C, 1, 3, 3))
            layers += _plkb(f"{fdb}.ffb{j}.plkb", cfg)
            layers.append(_Conv(f"{fdb}.ffb{j}.fuse", C, C, 1, 1))
        layers.append(_Conv(f"{fdb}.fuse", C, 3 * d + C, 1, 1))
        sfmb = f"fmb{i}.sfmb"
        layers += _plkb(f"{sfmb}.plkb", cfg)
        layers.append(_Conv(f"{sfmb}.spatial", C, C, 1, 1, pooled=True))
        layers.append(_Conv(f"{sfmb}.fuse", C, C, 1, 1))
        fsb = f"fmb{i}.fsb"
        layers += _plkb(f"{fsb}.plkb", cfg)
        layers.append(_Conv(f"{fsb}.dw3", C, 1, 3, 3))
        layers.append(_Conv(f"{fsb}.gate", C, 2 * C, 1, 1))
    layers.append(_Conv("up", 3 * s * s, C, 3, 3))
    return layers


def count_params(cfg: ModelConfig) -> ComplexityReport:
    return ComplexityReport(tuple(LayerCount(c.name, c.params, 0, c.c_out) for c in _convs(cfg)))


def _aux(cfg: ModelConfig, h: int, w: int) -> tuple[LayerCount, ...]:
    C, n = cfg.channels, cfg.n_fmb
    hw = C * h * w
    act = 5 * hw if cfg.activation == "gelu" else 0
    per_fmb = {
        # max pool comparisons + global average
        "pooling": hw + hw,
        # 4 taps per output pixel, on the pooled-then-upsampled map
        "bilinear": 4 * hw,
        # ffb adds (3), gate mul, sfmb add, fsb blend (2 mul + 1 add + 1 sub)
        "elementwise": 3 * hw + hw + hw + 4 * hw,
        "sigmoid": C + hw,
        "gelu": act,
    }
    totals = {k: n * v for k, v in per_fmb.items()}
    totals["elementwise"] += hw  # long skip
    return tuple(LayerCount(f"[{k}]", 0, v) for k, v in totals.items() if v)


def count_macs(cfg: ModelConfig, hr_h: int = 720, hr_w: int = 1280) -> ComplexityReport:
    """Per-layer MACs for producing an ``hr_h`` x ``hr_w`` output."""
    s = cfg.scale
    if hr_h % s or hr_w % s:
        raise ValueError(f"HR size {hr_w}x{hr_h} is not divisible by scale {s}")
    h, w = hr_h // s, hr_w // s
    ph, pw = max(1, h // cfg.pool_factor), max(1, w // cfg.pool_factor)
    entries = []
    for c in _convs(cfg):
        macs = c.macs(ph, pw) if c.pooled else c.macs(h, w)
        entries.append(LayerCount(c.name, c.params, macs, c.c_out))
    return ComplexityReport(tuple(entries), (hr_h, hr_w), _aux(cfg, h, w))


def strip_vs_full_macs(kernel: int, h: int, w: int) -> tuple[int, int]:
    """Per-channel MACs of a 1xK + Kx1 strip pair versus a full KxK depthwise kernel."""
    return 2 * kernel * h * w, kernel * kernel * h * w


def params_slope_in_kernel(cfg: ModelConfig) -> int:
    """Parameters added per unit of kernel size (two strips, five PLKBs per FMB)."""
    return 2 * cfg.split * 5 * cfg.n_fmb
