"""Command-line front end: synthesize data, train, evaluate, recover."""

from __future__ import annotations

import argparse
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from .critic import Critic
from .data import load_dataset, load_embedding_vectors, precompute_embeddings
from .embedder import ToyEmbedder
from .evaluate import DEFAULT_THRESHOLD, evaluate_success_rate
from .generator import Generator, GeneratorSpec
from .images import save_images, synth_images
from .losses import LossWeights
from .train import TrainConfig, save_curve_csv, train


def save_generator(generator: Generator, path: str | Path) -> None:
    torch.save(
        {"spec": asdict(generator.spec), "state": generator.state_dict()}, path
    )


def load_generator(path: str | Path) -> Generator:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    gen = Generator(GeneratorSpec(**payload["spec"]))
    gen.load_state_dict(payload["state"])
    gen.eval()
    return gen


def _cmd_synth_images(args: argparse.Namespace) -> int:
    images = synth_images(args.count, seed=args.seed)
    paths = save_images(args.out_dir, images)
    print(f"wrote {len(paths)} images to {args.out_dir}")
    return 0


def _cmd_precompute(args: argparse.Namespace) -> int:
    embedder = ToyEmbedder(role=args.role, seed=args.seed)
    n = precompute_embeddings(args.images, embedder, args.out)
    print(f"embedded {n} images ({embedder.role} model) -> {args.out}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    images, embeddings, _ = load_dataset(args.dataset)
    config = TrainConfig(
        epochs=args.epochs,
        lr=args.lr,
        seed=args.seed,
        batch_size=args.batch_size,
    )
    generator = Generator(GeneratorSpec(embedding_dim=embeddings.shape[1]), seed=config.seed)
    critic = Critic(seed=config.seed + 1)
    assistant = None if args.black_box else ToyEmbedder(role="assistant")
    judger = ToyEmbedder(role="judger")
    eval_images = eval_embeddings = None
    if args.eval_dataset:
        eval_images, eval_embeddings, _ = load_dataset(args.eval_dataset)
    records = train(
        generator,
        critic,
        images,
        embeddings,
        weights=LossWeights(),
        config=config,
        assistant=assistant,
        judger=judger,
        eval_images=eval_images,
        eval_embeddings=eval_embeddings,
        threshold=args.threshold,
    )
    save_generator(generator, args.out)
    if args.curve:
        save_curve_csv(records, args.curve)
    last = records[-1]
    print(
        f"trained {config.epochs} epochs: L_r {last.l_r:.4f}, "
        f"success rate {last.success_rate:.3f} -> {args.out}"
    )
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    generator = load_generator(args.model)
    images, embeddings, _ = load_dataset(args.dataset)
    judger = ToyEmbedder(role="judger")
    rate = evaluate_success_rate(generator, images, embeddings, judger, args.threshold)
    print(f"success rate {rate:.4f} over {images.shape[0]} pairs (threshold {args.threshold})")
    return 0


def _cmd_recover(args: argparse.Namespace) -> int:
    generator = load_generator(args.model)
    ids, embeddings = load_embedding_vectors(args.embeddings)
    norms = embeddings.norm(dim=1, keepdim=True).clamp_min(1e-12)
    with torch.no_grad():
        images = generator(embeddings / norms)
    paths = save_images(args.out_dir, images.numpy().astype(np.float32))
    for rid, p in zip(ids, paths):
        print(f"{rid} -> {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invgan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-images", help="render a procedural toy image set")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_synth_images)

    p = sub.add_parser("precompute-embeddings", help="embed an image directory to JSONL")
    p.add_argument("--images", required=True)
    p.add_argument("--role", choices=["target", "assistant", "judger"], default="target")
    p.add_argument("--seed", type=int, default=None, help="override the role's seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_precompute)

    p = sub.add_parser("train", help="train the recovery generator")
    p.add_argument("--dataset", required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=5e-4)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--black-box", action="store_true", help="no assistant model; L_e = 0")
    p.add_argument("--eval-dataset", help="held-out JSONL for the per-epoch success rate")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--curve", help="write per-epoch losses to this CSV")
    p.add_argument("--out", required=True, help="generator checkpoint path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="judger success rate of a trained generator")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("recover", help="render images from recovered embeddings")
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True, help="attack-toolkit CSV or JSONL")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_recover)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
