"""Single-head anchor detector network.

Topology (input S, divisible by 8):

  backbone   stem 3x3/1 -> [3x3/2 down + residual blocks] x3  (strides 2, 4, 8)
             cross-layer concat: the stride-8 map before the last residual
             stage is concatenated back onto its output, then reduced 1x1
  neck       deep branch: 3x3/2 down to stride 16, multi-window max-pool
             pyramid (windows concatenated with the identity path), conv
             stack, nearest-upsample x2 back to stride 8; concatenated with
             a 1x1-reduced shallow tap of the backbone output
  head       3x3 fuse conv, then a linear 1x1 conv emitting
             n_anchors * (5 + n_classes) channels per cell

Every convolution is Conv-BN-Mish except the final head convolution, which
is linear because the decode applies sigmoid/exp itself. The output grid is
(S/8, S/8, 42) for six anchors and two classes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    input_size: int = 416
    n_anchors: int = 6
    n_classes: int = 2
    channel_plan: tuple[int, int, int, int] = (32, 64, 128, 256)
    res_block_counts: tuple[int, int, int] = (1, 2, 2)
    spp_pool_sizes: tuple[int, ...] = (5, 9, 13)

    def __post_init__(self):
        if self.input_size % 8 != 0 or self.input_size <= 0:
            raise ConfigError(f"input_size must be a positive multiple of 8, got {self.input_size}")
        if len(self.channel_plan) != 4 or len(self.res_block_counts) != 3:
            raise ConfigError("channel_plan needs 4 widths and res_block_counts 3 entries")
        if any(k % 2 == 0 or k < 1 for k in self.spp_pool_sizes):
            raise ConfigError(f"spp windows must be odd and >= 1, got {self.spp_pool_sizes}")

    @property
    def grid_size(self) -> int:
        return self.input_size // 8

    @property
    def stride(self) -> int:
        return 8

    @property
    def cell_channels(self) -> int:
        return self.n_anchors * (5 + self.n_classes)


def conv_bn_mish(c_in: int, c_out: int, kernel: int, stride: int = 1) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, kernel, stride, padding=kernel // 2, bias=False),
        nn.BatchNorm2d(c_out),
        nn.Mish(),
    )


class ResBlock(nn.Module):
    """Shortcut-add block: 1x1 squeeze, 3x3 expand, identity add."""

    def __init__(self, channels: int):
        super().__init__()
        half = max(channels // 2, 1)
        self.squeeze = conv_bn_mish(channels, half, 1)
        self.expand = conv_bn_mish(half, channels, 3)

    def forward(self, x):
        return x + self.expand(self.squeeze(x))


class Backbone(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        c0, c1, c2, c3 = config.channel_plan
        r1, r2, r3 = config.res_block_counts
        self.stem = conv_bn_mish(3, c0, 3)
        self.down1 = conv_bn_mish(c0, c1, 3, stride=2)
        self.res1 = nn.Sequential(*[ResBlock(c1) for _ in range(r1)])
        self.down2 = conv_bn_mish(c1, c2, 3, stride=2)
        self.res2 = nn.Sequential(*[ResBlock(c2) for _ in range(r2)])
        self.down3 = conv_bn_mish(c2, c3, 3, stride=2)
        self.res3 = nn.Sequential(*[ResBlock(c3) for _ in range(r3)])
        self.cross_reduce = conv_bn_mish(2 * c3, c3, 1)

    def forward(self, x):
        x = self.stem(x)
        x = self.res1(self.down1(x))
        x = self.res2(self.down2(x))
        shallow8 = self.down3(x)
        deep8 = self.res3(shallow8)
        return self.cross_reduce(torch.cat([shallow8, deep8], dim=1))


class SpatialPyramidPool(nn.Module):
    """Stride-1 max pools at several odd windows, concatenated with identity."""

    def __init__(self, windows: tuple[int, ...]):
        super().__init__()
        self.pools = nn.ModuleList(
            nn.MaxPool2d(k, stride=1, padding=k // 2) for k in windows
        )

    def forward(self, x):
        return torch.cat([x] + [pool(x) for pool in self.pools], dim=1)


class Neck(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        c3 = config.channel_plan[-1]
        half = c3 // 2
        n_spp = len(config.spp_pool_sizes) + 1
        self.shallow = conv_bn_mish(c3, half, 1)
        self.pre_down = conv_bn_mish(c3, c3, 3, stride=2)
        self.pre_spp = conv_bn_mish(c3, half, 1)
        self.spp = SpatialPyramidPool(config.spp_pool_sizes)
        self.post_spp = nn.Sequential(
            conv_bn_mish(half * n_spp, half, 1),
            conv_bn_mish(half, c3, 3),
            conv_bn_mish(c3, half, 1),
        )
        self.upsample = nn.Upsample(scale_factor=2, mode="nearest")
        self.fuse = nn.Sequential(
            conv_bn_mish(2 * half, c3, 3),
            conv_bn_mish(c3, half, 1),
        )

    def forward(self, x):
        deep = self.post_spp(self.spp(self.pre_spp(self.pre_down(x))))
        return self.fuse(torch.cat([self.shallow(x), self.upsample(deep)], dim=1))


class DetectorNet(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.backbone = Backbone(config)
        self.neck = Neck(config)
        self.head = nn.Conv2d(config.channel_plan[-1] // 2, config.cell_channels, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if not torch.isfinite(x).all():
            raise ValueError("non-finite pixels in network input")
        if x.shape[-1] != self.config.input_size or x.shape[-2] != self.config.input_size:
            raise ValueError(
                f"expected {self.config.input_size}x{self.config.input_size} input, "
                f"got {tuple(x.shape[-2:])}"
            )
        return self.head(self.neck(self.backbone(x)))

    def set_backbone_frozen(self, frozen: bool) -> None:
        """Phase-1 freeze: stops both gradient flow and BN statistics updates."""
        for p in self.backbone.parameters():
            p.requires_grad_(not frozen)
        self._backbone_frozen = frozen

    def train(self, mode: bool = True):
        super().train(mode)
        if mode and getattr(self, "_backbone_frozen", False):
            self.backbone.eval()
        return self


def build_model(config: ModelConfig, seed: int | None = None) -> DetectorNet:
    """Construct the network; a seed pins the weight initialization."""
    if seed is not None:
        torch.manual_seed(seed)
    return DetectorNet(config)
