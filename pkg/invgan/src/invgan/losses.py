"""Generator-side losses and their weighting."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .embedder import ToyEmbedder, pairwise_distance


@dataclass(frozen=True)
class LossWeights:
    """Weights for reconstruction, realism, and embedding agreement.

    The default 3:1:1 sits at the strong-reconstruction end of the band
    that works well for this objective (3:1:1 down to 2:1:1).
    """

    w_r: float = 3.0
    w_d: float = 1.0
    w_e: float = 1.0

    def __post_init__(self):
        for name in ("w_r", "w_d", "w_e"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def recovery_loss(img: torch.Tensor, img_g: torch.Tensor) -> torch.Tensor:
    """Per-pixel mean absolute difference (resolution-independent L1)."""
    if img.shape != img_g.shape:
        raise ValueError(f"image shapes differ: {tuple(img.shape)} vs {tuple(img_g.shape)}")
    return (img - img_g).abs().mean()


def embedding_loss(
    embedder: ToyEmbedder,
    img: torch.Tensor,
    img_g: torch.Tensor,
    black_box: bool = False,
) -> torch.Tensor:
    """Mean distance between the two images' embeddings, in the embedder's
    own metric. In pure black-box mode the assistant model is unavailable
    and the term is a constant zero.
    """
    if black_box:
        return img_g.new_zeros(())
    return pairwise_distance(embedder(img), embedder(img_g), embedder.metric).mean()
