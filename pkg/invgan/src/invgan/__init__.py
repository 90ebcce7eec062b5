"""Toy-scale recovery of images from leaked embeddings."""

from .critic import Critic, critic_loss, gradient_penalty
from .embedder import EMBEDDING_DIM, ToyEmbedder, pairwise_distance
from .errors import MalformedFileError, TrainingDivergedError
from .evaluate import DEFAULT_THRESHOLD, evaluate_success_rate
from .generator import Generator, GeneratorSpec, ResidualUnit
from .images import PARAM_COUNT, SIZE, load_image, render_face, save_images, synth_images
from .losses import LossWeights, embedding_loss, recovery_loss
from .train import (
    EpochRecord,
    TrainConfig,
    load_curve_csv,
    save_curve_csv,
    train,
)

__all__ = [
    "Critic",
    "critic_loss",
    "gradient_penalty",
    "EMBEDDING_DIM",
    "ToyEmbedder",
    "pairwise_distance",
    "MalformedFileError",
    "TrainingDivergedError",
    "DEFAULT_THRESHOLD",
    "evaluate_success_rate",
    "Generator",
    "GeneratorSpec",
    "ResidualUnit",
    "PARAM_COUNT",
    "SIZE",
    "load_image",
    "render_face",
    "save_images",
    "synth_images",
    "LossWeights",
    "embedding_loss",
    "recovery_loss",
    "EpochRecord",
    "TrainConfig",
    "load_curve_csv",
    "save_curve_csv",
    "train",
]
