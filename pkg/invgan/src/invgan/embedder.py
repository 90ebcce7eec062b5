"""Frozen toy embedding networks.

Three roles appear in a full experiment: the target model whose embeddings
the generator inverts, an assistant model for the embedding loss, and a
judger model that scores reconstructions. All three share one architecture
and differ only by init seed, standing in for genuinely different face
models. Weights are frozen at construction; gradients still flow through
the network to its inputs, which is what the embedding loss needs.

A raw random net maps every image near one dominant direction (its mean
feature response), so all faces would look alike to it. Real verification
models are trained to spread identities apart; the toy stand-in gets the
same property by subtracting a frozen population-mean embedding, computed
once at construction from an internal calibration batch, before the final
normalization.
"""

from __future__ import annotations

import torch
from torch import nn

from .images import SIZE, synth_images

EMBEDDING_DIM = 64
_CALIBRATION_COUNT = 64
_CALIBRATION_SEED = 918273

# distinct frozen nets per role; seeds are arbitrary but fixed
ROLE_SEEDS = {"target": 11, "assistant": 22, "judger": 33}


class ToyEmbedder(nn.Module):
    """Small frozen conv net: (B, 1, 32, 32) -> unit-norm, centered (B, 64).

    metric is the distance the model's embeddings are meant to be compared
    under; downstream losses and evaluations follow it.
    """

    def __init__(self, role: str = "target", seed: int | None = None, metric: str = "cosine"):
        super().__init__()
        if role not in ROLE_SEEDS:
            raise ValueError(f"unknown role {role!r}, expected one of {sorted(ROLE_SEEDS)}")
        if metric not in ("cosine", "l2"):
            raise ValueError(f"unknown metric {metric!r}")
        self.role = role
        self.seed = ROLE_SEEDS[role] if seed is None else int(seed)
        self.metric = metric
        with torch.random.fork_rng():
            torch.manual_seed(self.seed)
            self.features = nn.Sequential(
                nn.Conv2d(1, 8, 3, stride=2, padding=1),
                nn.GELU(),
                nn.Conv2d(8, 16, 3, stride=2, padding=1),
                nn.GELU(),
                nn.Conv2d(16, 32, 3, stride=2, padding=1),
                nn.GELU(),
            )
            self.head = nn.Linear(32 * (SIZE // 8) ** 2, EMBEDDING_DIM)
        # all embedders share one calibration batch; the center depends on
        # the weights, so it still differs per role
        calib = torch.as_tensor(synth_images(_CALIBRATION_COUNT, seed=_CALIBRATION_SEED))
        with torch.no_grad():
            self.register_buffer("center", self._raw(calib).mean(dim=0))
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    def _raw(self, images: torch.Tensor) -> torch.Tensor:
        return self.head(self.features(images).flatten(1))

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        if images.ndim != 4 or images.shape[1:] != (1, SIZE, SIZE):
            raise ValueError(f"expected (B, 1, {SIZE}, {SIZE}), got {tuple(images.shape)}")
        e = self._raw(images) - self.center
        return e / e.norm(dim=1, keepdim=True).clamp_min(1e-12)

    def embed_numpy(self, images) -> "torch.Tensor":
        """Convenience: accept a float numpy batch, no gradient tracking."""
        with torch.no_grad():
            return self(torch.as_tensor(images, dtype=torch.float32))


def pairwise_distance(a: torch.Tensor, b: torch.Tensor, metric: str) -> torch.Tensor:
    """Row-wise distance between two (B, D) embedding batches."""
    if a.shape != b.shape:
        raise ValueError(f"embedding shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}")
    if metric == "cosine":
        an = a / a.norm(dim=1, keepdim=True).clamp_min(1e-12)
        bn = b / b.norm(dim=1, keepdim=True).clamp_min(1e-12)
        return 1.0 - (an * bn).sum(dim=1)
    if metric == "l2":
        return (a - b).norm(dim=1)
    raise ValueError(f"unknown metric {metric!r}")
