"""Segmentation networks for the two raster views.

The spherical-view U-Net keeps the row (layer) dimension intact through its
encoder by pooling only along azimuth (1x2), mirrors that in the decoder, and
for reduced-resolution inputs appends 2x1 upsampling stages so that a 32- or
16-row input still produces a 64-row confidence map; all simulated scanners
are scored against the same full-resolution ground truth.

The bird-eye-view network follows the LoDNN layout: a small encoder, a
dilated-convolution context module for multi-scale aggregation, and a decoder
that restores the grid with a deconvolution instead of max-unpooling. The
filter counts used here are recorded in the checkpoint metadata.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

SV_OUTPUT_ROWS = 64
BEV_SHAPE = (400, 200)

UNET_ENCODER_WIDTHS = (32, 64, 128)
UNET_BOTTOM_WIDTH = 256
LODNN_STEM_WIDTH = 32
LODNN_CONTEXT_WIDTH = 128
LODNN_DILATIONS = (1, 2, 4, 8, 16, 32)


@dataclass
class ModelSpec:
    view: str = "sv"             # sv | bev
    resolution: int = 64         # SV input rows: 64 | 32 | 16 (ignored for bev)
    in_channels: int = 4
    arch: str = "unet"           # unet | lodnn
    loss_gamma: float = 2.0
    learning_rate: float = 1e-4
    patience: int = 5
    max_epochs: int = 50
    batch_size: int = 2
    seed: int = 0
    val_fraction: float = 0.2

    def __post_init__(self):
        if self.view not in ("sv", "bev"):
            raise ValueError(f"unknown view {self.view!r}")
        if self.view == "sv" and self.resolution not in (64, 32, 16):
            raise ValueError(f"unsupported SV resolution {self.resolution}")
        if self.arch not in ("unet", "lodnn"):
            raise ValueError(f"unknown architecture {self.arch!r}")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _conv_block(c_in, c_out):
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, 3, padding=1),
        nn.ReLU(inplace=True),
        nn.Conv2d(c_out, c_out, 3, padding=1),
        nn.ReLU(inplace=True),
    )


class Normalizer(nn.Module):
    """Per-channel standardization with statistics frozen from the train split."""

    def __init__(self, n_channels):
        super().__init__()
        self.register_buffer("mean", torch.zeros(1, n_channels, 1, 1))
        self.register_buffer("std", torch.ones(1, n_channels, 1, 1))

    def set_stats(self, mean, std):
        self.mean.copy_(torch.as_tensor(mean, dtype=torch.float32).view(1, -1, 1, 1))
        std = torch.as_tensor(std, dtype=torch.float32).clamp_min(1e-6)
        self.std.copy_(std.view(1, -1, 1, 1))

    def forward(self, x):
        return (x - self.mean) / self.std


class SVUnet(nn.Module):
    """Three 1x2 pool/up steps plus 2x1 row-upsampling tails for 32/16 inputs."""

    def __init__(self, in_channels, input_rows=64):
        super().__init__()
        if SV_OUTPUT_ROWS % input_rows or input_rows > SV_OUTPUT_ROWS:
            raise ValueError(f"cannot upsample {input_rows} rows to {SV_OUTPUT_ROWS}")
        w1, w2, w3 = UNET_ENCODER_WIDTHS
        self.normalize = Normalizer(in_channels)
        self.enc1 = _conv_block(in_channels, w1)
        self.enc2 = _conv_block(w1, w2)
        self.enc3 = _conv_block(w2, w3)
        self.pool = nn.MaxPool2d((1, 2))
        self.bottom = _conv_block(w3, UNET_BOTTOM_WIDTH)
        self.up3 = nn.ConvTranspose2d(UNET_BOTTOM_WIDTH, w3, (1, 2), stride=(1, 2))
        self.dec3 = _conv_block(2 * w3, w3)
        self.up2 = nn.ConvTranspose2d(w3, w2, (1, 2), stride=(1, 2))
        self.dec2 = _conv_block(2 * w2, w2)
        self.up1 = nn.ConvTranspose2d(w2, w1, (1, 2), stride=(1, 2))
        self.dec1 = _conv_block(2 * w1, w1)
        n_tails = {64: 0, 32: 1, 16: 2}[input_rows]
        tails = []
        for _ in range(n_tails):
            tails += [nn.ConvTranspose2d(w1, w1, (2, 1), stride=(2, 1)),
                      nn.ReLU(inplace=True)]
        self.row_upsample = nn.Sequential(*tails)
        self.head = nn.Conv2d(w1, 1, 1)

    def forward(self, x):
        x = self.normalize(x)
        e1 = self.enc1(x)
        e2 = self.enc2(self.pool(e1))
        e3 = self.enc3(self.pool(e2))
        b = self.bottom(self.pool(e3))
        d3 = self.dec3(torch.cat([self.up3(b), e3], dim=1))
        d2 = self.dec2(torch.cat([self.up2(d3), e2], dim=1))
        d1 = self.dec1(torch.cat([self.up1(d2), e1], dim=1))
        return torch.sigmoid(self.head(self.row_upsample(d1)))


class LoDNNStyle(nn.Module):
    """Encoder, dilated context module, deconvolution decoder; dense BEV output."""

    def __init__(self, in_channels):
        super().__init__()
        w = LODNN_STEM_WIDTH
        cw = LODNN_CONTEXT_WIDTH
        self.normalize = Normalizer(in_channels)
        self.stem = _conv_block(in_channels, w)
        self.pool = nn.MaxPool2d(2)
        context = [nn.Conv2d(w, cw, 3, padding=1), nn.ELU(inplace=True)]
        for d in LODNN_DILATIONS:
            context += [nn.Conv2d(cw, cw, 3, padding=d, dilation=d),
                        nn.ELU(inplace=True)]
        context += [nn.Conv2d(cw, w, 1), nn.ELU(inplace=True)]
        self.context = nn.Sequential(*context)
        self.deconv = nn.ConvTranspose2d(w, w, 2, stride=2)
        self.head = nn.Sequential(nn.Conv2d(w, w, 3, padding=1),
                                  nn.ReLU(inplace=True),
                                  nn.Conv2d(w, 1, 1))

    def forward(self, x):
        x = self.normalize(x)
        x = self.stem(x)
        x = self.context(self.pool(x))
        x = self.deconv(x)
        return torch.sigmoid(self.head(x))


def build_model(spec: ModelSpec) -> nn.Module:
    """Network for a spec; SV outputs are 64 rows regardless of input rows."""
    if spec.view == "sv":
        if spec.arch != "unet":
            raise ValueError("spherical view uses the unet architecture")
        return SVUnet(spec.in_channels, input_rows=spec.resolution)
    if spec.arch != "lodnn":
        raise ValueError("bird-eye view uses the lodnn architecture")
    return LoDNNStyle(spec.in_channels)


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())


def architecture_metadata(spec: ModelSpec) -> dict:
    """Filter-count record stored with every checkpoint."""
    if spec.view == "sv":
        return {
            "encoder_widths": list(UNET_ENCODER_WIDTHS),
            "bottom_width": UNET_BOTTOM_WIDTH,
            "pooling": "1x2",
            "row_upsample_stages": {64: 0, 32: 1, 16: 2}[spec.resolution],
        }
    return {
        "stem_width": LODNN_STEM_WIDTH,
        "context_width": LODNN_CONTEXT_WIDTH,
        "context_dilations": list(LODNN_DILATIONS),
        "decoder": "deconvolution 2x2 stride 2",
    }
