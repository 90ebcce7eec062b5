"""Embedding-conditioned image generator.

Two phases. The multi-path phase reads the embedding at two paces: a rapid
branch deconvolves straight to the merge resolution in one hop, a mild
branch gets there in two, extracting coarser-grained structure on the way.
Both land on the same spatial grid and are concatenated. The single-path
phase then repeatedly doubles the resolution while halving the channels,
each upsample followed by a shape-preserving residual unit that cleans the
image up, and a final convolution squashes to pixel range.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class GeneratorSpec:
    embedding_dim: int = 64
    merge_size: int = 8  # spatial size where the branches join
    rapid_channels: int = 32
    mild_channels: int = 32
    mild_mid_size: int = 2  # intermediate grid of the slower branch
    upsample_stages: int = 2
    image_size: int = 32
    out_channels: int = 1

    def __post_init__(self):
        for name in (
            "embedding_dim",
            "merge_size",
            "rapid_channels",
            "mild_channels",
            "mild_mid_size",
            "upsample_stages",
            "image_size",
            "out_channels",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.merge_size * 2**self.upsample_stages != self.image_size:
            raise ValueError(
                f"merge size {self.merge_size} cannot reach image size "
                f"{self.image_size} in {self.upsample_stages} doubling stages"
            )
        if self.merge_size % self.mild_mid_size != 0:
            raise ValueError("mild branch sizes must nest evenly")

    @property
    def merged_channels(self) -> int:
        return self.rapid_channels + self.mild_channels


class ResidualUnit(nn.Module):
    """Two 3x3 convolutions with a skip; never changes the tensor shape."""

    def __init__(self, channels: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(channels, channels, 3, padding=1),
        )
        self.act = nn.LeakyReLU(0.2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.act(x + self.body(x))


class Generator(nn.Module):
    def __init__(self, spec: GeneratorSpec = GeneratorSpec(), seed: int = 0):
        super().__init__()
        self.spec = spec
        s = spec
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            self.rapid = nn.Sequential(
                nn.ConvTranspose2d(s.embedding_dim, s.rapid_channels, s.merge_size),
                nn.LeakyReLU(0.2),
            )
            step = s.merge_size // s.mild_mid_size
            self.mild = nn.Sequential(
                nn.ConvTranspose2d(s.embedding_dim, s.embedding_dim, s.mild_mid_size),
                nn.LeakyReLU(0.2),
                nn.ConvTranspose2d(s.embedding_dim, s.mild_channels, step, stride=step),
                nn.LeakyReLU(0.2),
            )
            stages = []
            ch = s.merged_channels
            for _ in range(s.upsample_stages):
                # resolution doubles, channels halve
                stages += [
                    nn.ConvTranspose2d(ch, ch // 2, 4, stride=2, padding=1),
                    nn.LeakyReLU(0.2),
                    ResidualUnit(ch // 2),
                ]
                ch //= 2
            self.single_path = nn.Sequential(*stages)
            self.head = nn.Conv2d(ch, s.out_channels, 3, padding=1)

    def forward(self, embeddings: torch.Tensor) -> torch.Tensor:
        if embeddings.ndim != 2 or embeddings.shape[1] != self.spec.embedding_dim:
            raise ValueError(
                f"expected (B, {self.spec.embedding_dim}) embeddings, "
                f"got {tuple(embeddings.shape)}"
            )
        z = embeddings[:, :, None, None]
        merged = torch.cat([self.rapid(z), self.mild(z)], dim=1)
        img = self.head(self.single_path(merged))
        return torch.sigmoid(img)
