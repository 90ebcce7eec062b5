"""Dataset files and interchange with the distance-attack toolkit.

Two formats cross this package's boundary. The dataset JSONL pairs image
paths with precomputed target-model embeddings, one object per line:
{"image": "faces/face_00000.png", "embedding": [...]}. Recovered
embeddings arrive in the attack toolkit's interchange formats: CSV with a
`dim=N,metric=M` header and bare value rows, or JSONL objects with "id"
and "values" keys. Readers here accept both.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .embedder import ToyEmbedder
from .errors import MalformedFileError
from .images import load_image


def precompute_embeddings(
    image_dir: str | Path, embedder: ToyEmbedder, out_path: str | Path
) -> int:
    """Embed every PNG under image_dir; write the dataset JSONL.

    Image paths are stored relative to the JSONL's directory so the pair
    of files can move together.
    """
    image_dir = Path(image_dir)
    out_path = Path(out_path)
    paths = sorted(image_dir.glob("*.png"))
    if not paths:
        raise MalformedFileError(f"no .png images under {image_dir}")
    images = np.stack([load_image(p) for p in paths])
    emb = embedder.embed_numpy(images).numpy()
    with out_path.open("w", encoding="utf-8") as fh:
        for p, e in zip(paths, emb):
            try:
                rel = p.relative_to(out_path.parent)
            except ValueError:
                rel = p
            rec = {"image": str(rel), "embedding": [float(v) for v in e]}
            fh.write(json.dumps(rec) + "\n")
    return len(paths)


def load_dataset(jsonl_path: str | Path) -> tuple[torch.Tensor, torch.Tensor, list[Path]]:
    """Read a dataset JSONL back into (images, embeddings, image paths)."""
    jsonl_path = Path(jsonl_path)
    base = jsonl_path.parent
    images, embeddings, paths = [], [], []
    try:
        lines = jsonl_path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise MalformedFileError(f"cannot read {jsonl_path}: {exc}") from exc
    for i, ln in enumerate(lines):
        if not ln.strip():
            continue
        try:
            rec = json.loads(ln)
            img_path = Path(rec["image"])
            emb = [float(v) for v in rec["embedding"]]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise MalformedFileError(f"{jsonl_path}:{i + 1}: {exc}") from exc
        if not img_path.is_absolute():
            img_path = base / img_path
        images.append(load_image(img_path))
        embeddings.append(emb)
        paths.append(img_path)
    if not images:
        raise MalformedFileError(f"{jsonl_path}: empty dataset")
    if len({len(e) for e in embeddings}) != 1:
        raise MalformedFileError(f"{jsonl_path}: ragged embedding lengths")
    emb_arr = np.asarray(embeddings, dtype=np.float32)
    return (
        torch.as_tensor(np.stack(images)),
        torch.as_tensor(emb_arr),
        paths,
    )


def load_embedding_vectors(path: str | Path) -> tuple[list[str], torch.Tensor]:
    """Read attack-toolkit embedding files (CSV or JSONL) as (ids, tensor)."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise MalformedFileError(f"cannot read {path}: {exc}") from exc
    ids: list[str] = []
    rows: list[list[float]] = []
    if path.suffix.lower() == ".csv":
        if not lines:
            raise MalformedFileError(f"{path}: missing CSV header")
        try:
            fields = dict(part.split("=", 1) for part in lines[0].split(","))
            dim = int(fields["dim"])
        except (ValueError, KeyError) as exc:
            raise MalformedFileError(f"{path}: bad header {lines[0]!r}") from exc
        for i, ln in enumerate(lines[1:]):
            if not ln.strip():
                continue
            try:
                row = [float(v) for v in ln.split(",")]
            except ValueError as exc:
                raise MalformedFileError(f"{path}:{i + 2}: {exc}") from exc
            if len(row) != dim:
                raise MalformedFileError(f"{path}:{i + 2}: expected {dim} values")
            ids.append(f"row{i}")
            rows.append(row)
    else:
        for i, ln in enumerate(lines):
            if not ln.strip():
                continue
            try:
                rec = json.loads(ln)
                ids.append(str(rec["id"]))
                rows.append([float(v) for v in rec["values"]])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise MalformedFileError(f"{path}:{i + 1}: {exc}") from exc
    if not rows:
        raise MalformedFileError(f"{path}: no embeddings")
    if len({len(r) for r in rows}) != 1:
        raise MalformedFileError(f"{path}: ragged embedding lengths")
    return ids, torch.as_tensor(np.asarray(rows, dtype=np.float32))
