"""Wasserstein critic with gradient penalty.

Standard WGAN-GP shape: no normalization layers anywhere, a small residual
block after each strided convolution, one scalar score per sample, and a
per-sample penalty on the gradient norm at points interpolated between
real and generated images.
"""

from __future__ import annotations

import torch
from torch import nn

from .generator import ResidualUnit
from .images import SIZE

DEFAULT_PENALTY_WEIGHT = 10.0


class Critic(nn.Module):
    def __init__(self, in_channels: int = 1, seed: int = 0):
        super().__init__()
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            self.net = nn.Sequential(
                nn.Conv2d(in_channels, 16, 4, stride=2, padding=1),
                nn.LeakyReLU(0.2),
                ResidualUnit(16),
                nn.Conv2d(16, 32, 4, stride=2, padding=1),
                nn.LeakyReLU(0.2),
                ResidualUnit(32),
                nn.Conv2d(32, 64, 4, stride=2, padding=1),
                nn.LeakyReLU(0.2),
            )
            self.head = nn.Linear(64 * (SIZE // 8) ** 2, 1)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """One unbounded realness score per sample, shape (B,)."""
        if images.ndim != 4:
            raise ValueError(f"expected a (B, C, H, W) batch, got {tuple(images.shape)}")
        return self.head(self.net(images).flatten(1)).squeeze(1)


def gradient_penalty(
    critic: nn.Module,
    real: torch.Tensor,
    fake: torch.Tensor,
    weight: float = DEFAULT_PENALTY_WEIGHT,
) -> torch.Tensor:
    """weight * mean((|grad critic(x_hat)| - 1)^2) over per-sample interpolates."""
    if real.shape != fake.shape:
        raise ValueError(f"batch shapes differ: {tuple(real.shape)} vs {tuple(fake.shape)}")
    if real.shape[0] == 0:
        raise ValueError("empty batch")
    eps = torch.rand(real.shape[0], 1, 1, 1, device=real.device)
    mixed = (eps * real + (1.0 - eps) * fake).detach().requires_grad_(True)
    scores = critic(mixed)
    (grads,) = torch.autograd.grad(
        scores.sum(), mixed, create_graph=True, retain_graph=True
    )
    norms = grads.flatten(1).norm(dim=1)
    return weight * ((norms - 1.0) ** 2).mean()


def critic_loss(
    critic: nn.Module,
    real: torch.Tensor,
    fake: torch.Tensor,
    penalty_weight: float = DEFAULT_PENALTY_WEIGHT,
) -> tuple[torch.Tensor, torch.Tensor]:
    """(Wasserstein critic loss, gradient penalty), both minimized together."""
    if real.shape[0] == 0 or fake.shape[0] == 0:
        raise ValueError("empty batch")
    wloss = critic(fake).mean() - critic(real).mean()
    penalty = gradient_penalty(critic, real, fake, penalty_weight)
    return wloss, penalty
