"""Judger-based scoring of reconstructions."""

from __future__ import annotations

from typing import Callable

import torch

from .embedder import ToyEmbedder, pairwise_distance

# acceptance threshold commonly used with cosine verification models
DEFAULT_THRESHOLD = 0.63


def evaluate_success_rate(
    generate: Callable[[torch.Tensor], torch.Tensor],
    images: torch.Tensor,
    embeddings: torch.Tensor,
    judger: ToyEmbedder,
    threshold: float = DEFAULT_THRESHOLD,
    batch_size: int = 64,
) -> float:
    """Fraction of reconstructions the judger accepts as the original.

    A reconstruction counts as a success when the judger-space distance
    between the original image and the image generated from its embedding
    is at or below the threshold.
    """
    if images.shape[0] == 0:
        raise ValueError("empty test set")
    if images.shape[0] != embeddings.shape[0]:
        raise ValueError("images and embeddings must pair up")
    hits = 0
    with torch.no_grad():
        for lo in range(0, images.shape[0], batch_size):
            img = images[lo : lo + batch_size]
            emb = embeddings[lo : lo + batch_size]
            recon = generate(emb)
            d = pairwise_distance(judger(img), judger(recon), judger.metric)
            hits += int((d <= threshold).sum())
    return hits / images.shape[0]
