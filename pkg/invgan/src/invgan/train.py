"""Alternating GAN training with a supervised reconstruction anchor.

Schedule follows the usual Wasserstein recipe, inverted in favor of the
generator: per batch, one critic update, then several generator updates
(the reconstruction pairing makes generator steps cheap and informative,
while the critic only needs to stay roughly calibrated). Learning rates
decay by a fixed fraction every epoch.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn

from .critic import DEFAULT_PENALTY_WEIGHT, critic_loss
from .embedder import ToyEmbedder
from .errors import MalformedFileError, TrainingDivergedError
from .evaluate import DEFAULT_THRESHOLD, evaluate_success_rate
from .losses import LossWeights, embedding_loss, recovery_loss

CURVE_HEADER = ["epoch", "L_r", "L_d", "L_e", "success_rate"]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    lr: float = 5e-4
    lr_decay_per_epoch: float = 0.02
    gen_steps_per_disc_step: int = 5
    gradient_penalty_weight: float = DEFAULT_PENALTY_WEIGHT
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.gen_steps_per_disc_step < 1:
            raise ValueError("epochs, batch_size, and step ratio must be positive")
        if not 0.0 <= self.lr_decay_per_epoch < 1.0:
            raise ValueError("lr_decay_per_epoch must lie in [0, 1)")
        if self.lr <= 0 or self.gradient_penalty_weight < 0:
            raise ValueError("lr must be positive, penalty weight non-negative")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int  # 1-based
    l_r: float
    l_d: float
    l_e: float
    success_rate: float  # nan when no judger was supplied


def _check_finite(value: torch.Tensor, epoch: int, what: str) -> None:
    if not torch.isfinite(value):
        raise TrainingDivergedError(
            f"{what} became {float(value.detach())!r} in epoch {epoch}; "
            "lower the learning rate or the penalty weight"
        )


def train(
    generator: nn.Module,
    critic: nn.Module,
    images: torch.Tensor,
    embeddings: torch.Tensor,
    weights: LossWeights = LossWeights(),
    config: TrainConfig = TrainConfig(),
    assistant: ToyEmbedder | None = None,
    judger: ToyEmbedder | None = None,
    eval_images: torch.Tensor | None = None,
    eval_embeddings: torch.Tensor | None = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> list[EpochRecord]:
    """Train in place; returns one record per epoch.

    The embedding loss runs through `assistant` when given, else it is the
    black-box constant zero. When a judger is supplied the per-epoch
    success rate is measured on the eval pair (falling back to the
    training data), otherwise the column is NaN.
    """
    if images.shape[0] == 0:
        raise ValueError("empty dataset")
    if images.shape[0] != embeddings.shape[0]:
        raise ValueError("images and embeddings must pair up")
    gen_opt = torch.optim.Adam(generator.parameters(), lr=config.lr, betas=(0.5, 0.9))
    crit_opt = torch.optim.Adam(critic.parameters(), lr=config.lr, betas=(0.5, 0.9))
    gamma = 1.0 - config.lr_decay_per_epoch
    gen_sched = torch.optim.lr_scheduler.ExponentialLR(gen_opt, gamma)
    crit_sched = torch.optim.lr_scheduler.ExponentialLR(crit_opt, gamma)
    shuffler = torch.Generator().manual_seed(config.seed)
    noise = torch.Generator().manual_seed(config.seed + 1)

    records = []
    n = images.shape[0]
    for epoch in range(1, config.epochs + 1):
        order = torch.randperm(n, generator=shuffler)
        sums = {"l_r": 0.0, "l_d": 0.0, "l_e": 0.0}
        batches = 0
        for lo in range(0, n, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            real = images[idx]
            emb = embeddings[idx]

            # critic step: keep scores calibrated on current fakes
            with torch.no_grad():
                fake = generator(emb)
            # the penalty's interpolation noise must not disturb the
            # shuffler stream, so it draws from its own generator
            with torch.random.fork_rng():
                torch.manual_seed(int(torch.randint(2**31, (1,), generator=noise)))
                wloss, penalty = critic_loss(
                    critic, real, fake, config.gradient_penalty_weight
                )
            d_total = wloss + penalty
            _check_finite(d_total, epoch, "critic loss")
            crit_opt.zero_grad()
            d_total.backward()
            crit_opt.step()

            for _ in range(config.gen_steps_per_disc_step):
                recon = generator(emb)
                l_r = recovery_loss(real, recon)
                l_d = -critic(recon).mean()
                if assistant is not None:
                    l_e = embedding_loss(assistant, real, recon)
                else:
                    l_e = recon.new_zeros(())
                total = weights.w_r * l_r + weights.w_d * l_d + weights.w_e * l_e
                _check_finite(total, epoch, "generator loss")
                gen_opt.zero_grad()
                total.backward()
                gen_opt.step()

            sums["l_r"] += float(l_r.detach())
            sums["l_d"] += float(d_total.detach())
            sums["l_e"] += float(l_e.detach())
            batches += 1
        gen_sched.step()
        crit_sched.step()

        rate = float("nan")
        if judger is not None:
            ev_img = eval_images if eval_images is not None else images
            ev_emb = eval_embeddings if eval_embeddings is not None else embeddings
            rate = evaluate_success_rate(generator, ev_img, ev_emb, judger, threshold)
        records.append(
            EpochRecord(
                epoch,
                sums["l_r"] / batches,
                sums["l_d"] / batches,
                sums["l_e"] / batches,
                rate,
            )
        )
    return records


def save_curve_csv(records: list[EpochRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_HEADER)
        for r in records:
            writer.writerow([r.epoch, repr(r.l_r), repr(r.l_d), repr(r.l_e), repr(r.success_rate)])


def load_curve_csv(path: str | Path) -> list[EpochRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].split(",") != CURVE_HEADER:
        raise MalformedFileError(f"{path}: expected header {','.join(CURVE_HEADER)}")
    records = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        parts = ln.split(",")
        if len(parts) != len(CURVE_HEADER):
            raise MalformedFileError(f"{path}: bad row {ln!r}")
        records.append(
            EpochRecord(int(parts[0]), *(float(p) for p in parts[1:]))
        )
    return records
