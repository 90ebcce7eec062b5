"""Embedding vectors, distance metrics, and synthetic population generation.

An embedding is an immutable 1-D float64 vector. Distances come in three
flavours: plain Euclidean, squared Euclidean (the solver-native form), and
cosine distance (1 - cosine similarity). Synthetic populations are drawn
from a low-rank factor model so that subspace attacks have something real
to exploit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError, MalformedFileError, ZeroVectorError

UNIT_NORM_TOL = 1e-9

# Spectrum profile for synthetic populations: geometric decay per component.
# Chosen so a 33-of-128 population lands in the regime where rank-33
# truncation error sits near 5e-2 and the last kept component still carries
# roughly 0.13 of scale.
SPECTRUM_TOP = 0.5
SPECTRUM_DECAY = 0.96


class Metric(str, Enum):
    """Distance conventions understood by the oracle and the solvers."""

    SQUARED_L2 = "squared-l2"
    L2 = "l2"
    COSINE = "cosine"


@dataclass(frozen=True, eq=False)
class Embedding:
    """Fixed-length real feature vector; values are read-only after construction."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("embedding must be a non-empty 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.size)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def is_unit(self, tol: float = UNIT_NORM_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def __repr__(self) -> str:  # keep reprs short; vectors can be long
        head = np.array2string(self.values[:4], precision=4, separator=", ")
        suffix = ", ..." if self.dim > 4 else ""
        return f"Embedding(dim={self.dim}, values={head[:-1]}{suffix}])"


def as_matrix(embeddings: Sequence[Embedding]) -> np.ndarray:
    """Stack embeddings into a (count, dim) float64 matrix.

    Raises DimensionMismatchError if the dimensions disagree.
    """
    if not embeddings:
        raise ValueError("need at least one embedding")
    dim = embeddings[0].dim
    for e in embeddings:
        if e.dim != dim:
            raise DimensionMismatchError(f"mixed dimensions: {e.dim} vs {dim}")
    return np.stack([e.values for e in embeddings])


def distance(a: Embedding, b: Embedding, metric: Metric = Metric.L2) -> float:
    """Distance between two embeddings under the given metric.

    Cosine distance is 1 - cos(a, b) and requires both vectors to be
    nonzero; it ranges over [0, 2].
    """
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dim {a.dim} vs {b.dim}")
    if metric == Metric.COSINE:
        na, nb = a.norm(), b.norm()
        if na == 0.0 or nb == 0.0:
            raise ZeroVectorError("cosine distance undefined for zero vectors")
        sim = float(np.dot(a.values, b.values)) / (na * nb)
        return 1.0 - sim
    diff = a.values - b.values
    sq = float(np.dot(diff, diff))
    if metric == Metric.SQUARED_L2:
        return sq
    return float(np.sqrt(sq))


def normalize(e: Embedding) -> Embedding:
    """Rescale to unit norm. Raises ZeroVectorError on (near-)zero input."""
    n = e.norm()
    if n < 1e-300:
        raise ZeroVectorError("cannot normalize a zero vector")
    return Embedding(e.values / n)


def angle_between(a: Embedding, b: Embedding) -> float:
    """Angle in radians between two nonzero vectors; used for direction errors."""
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("angle undefined for zero vectors")
    c = float(np.dot(a.values, b.values)) / (na * nb)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


@dataclass(frozen=True)
class PopulationSpec:
    """Parameters of a synthetic low-rank embedding population."""

    count: int
    ambient_dim: int
    intrinsic_rank: int
    noise_scale: float
    seed: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be positive")
        if self.ambient_dim < 1:
            raise ValueError("ambient_dim must be positive")
        if not (1 <= self.intrinsic_rank <= self.ambient_dim):
            raise ValueError("intrinsic_rank must lie in [1, ambient_dim]")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be non-negative")


def population_spectrum(rank: int) -> np.ndarray:
    """Descending per-component scales used by synth_population."""
    return SPECTRUM_TOP * SPECTRUM_DECAY ** np.arange(rank)


def synth_population(spec: PopulationSpec) -> list[Embedding]:
    """Draw a seeded population from a noisy low-rank factor model.

    Each sample is factor @ (spectrum * latent) + isotropic noise, where the
    factor is a fixed orthonormal ambient_dim x intrinsic_rank matrix and the
    latent coordinates are standard normal. Identical specs produce
    bit-identical populations.
    """
    rng = np.random.default_rng(spec.seed)
    raw = rng.standard_normal((spec.ambient_dim, spec.intrinsic_rank))
    q, r = np.linalg.qr(raw)
    # make the QR factor deterministic regardless of LAPACK sign convention
    q = q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))
    spectrum = population_spectrum(spec.intrinsic_rank)
    latents = rng.standard_normal((spec.count, spec.intrinsic_rank))
    samples = (latents * spectrum) @ q.T
    if spec.noise_scale > 0:
        samples = samples + spec.noise_scale * rng.standard_normal(samples.shape)
    return [Embedding(row) for row in samples]


# ---------------------------------------------------------------------------
# Persistence. CSV carries a `dim=<n>,metric=<name>` header line followed by
# one comma-separated vector per line; JSONL carries {"id": ..., "values":
# [...]} records. Floats are written with repr(), which round-trips exactly.
# ---------------------------------------------------------------------------


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        f = fmt.lower()
        if f not in ("csv", "jsonl"):
            raise ValueError(f"unknown format {fmt!r}")
        return f
    if path.suffix.lower() == ".jsonl":
        return "jsonl"
    return "csv"


def save_embeddings(
    path: str | Path,
    embeddings: Sequence[Embedding],
    fmt: str | None = None,
    metric: Metric = Metric.L2,
    ids: Sequence[str] | None = None,
) -> None:
    """Write embeddings to CSV or JSONL (format inferred from the suffix).

    An empty list writes a header-only CSV (dim=0) or an empty JSONL file.
    """
    path = Path(path)
    fmt = _infer_format(path, fmt)
    if ids is not None and len(ids) != len(embeddings):
        raise ValueError("ids must match embeddings in length")
    if embeddings:
        as_matrix(embeddings)  # validates consistent dims
    with path.open("w", encoding="utf-8") as fh:
        if fmt == "csv":
            dim = embeddings[0].dim if embeddings else 0
            fh.write(f"dim={dim},metric={metric.value}\n")
            for e in embeddings:
                fh.write(",".join(repr(float(v)) for v in e.values) + "\n")
        else:
            for i, e in enumerate(embeddings):
                rid = ids[i] if ids is not None else f"e{i}"
                rec = {"id": rid, "values": [float(v) for v in e.values]}
                fh.write(json.dumps(rec) + "\n")


def load_embedding_records(
    path: str | Path, fmt: str | None = None
) -> list[tuple[str, Embedding]]:
    """Load (id, embedding) pairs; CSV rows get positional ids row0, row1, ..."""
    path = Path(path)
    fmt = _infer_format(path, fmt)
    records: list[tuple[str, Embedding]] = []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedFileError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if fmt == "csv":
        if not lines:
            raise MalformedFileError(f"{path}: missing CSV header")
        header = lines[0]
        try:
            fields = dict(part.split("=", 1) for part in header.split(","))
            dim = int(fields["dim"])
            Metric(fields["metric"])
        except (ValueError, KeyError) as exc:
            raise MalformedFileError(f"{path}: bad header {header!r}") from exc
        for i, line in enumerate(lines[1:]):
            if not line.strip():
                continue
            try:
                vals = np.array([float(v) for v in line.split(",")])
            except ValueError as exc:
                raise MalformedFileError(f"{path}: bad row {i}") from exc
            if dim and vals.size != dim:
                raise MalformedFileError(
                    f"{path}: row {i} has {vals.size} values, header says {dim}"
                )
            records.append((f"row{i}", Embedding(vals)))
    else:
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                records.append((str(rec["id"]), Embedding(np.array(rec["values"]))))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise MalformedFileError(f"{path}: bad record on line {i}") from exc
    return records


def load_embeddings(path: str | Path, fmt: str | None = None) -> list[Embedding]:
    """Load just the vectors from a CSV or JSONL embedding file."""
    return [e for _, e in load_embedding_records(path, fmt)]


def csv_metric(path: str | Path) -> Metric:
    """Read the metric recorded in a CSV embedding file's header."""
    with Path(path).open("r", encoding="utf-8") as fh:
        header = fh.readline().strip()
    try:
        fields = dict(part.split("=", 1) for part in header.split(","))
        return Metric(fields["metric"])
    except (ValueError, KeyError) as exc:
        raise MalformedFileError(f"{path}: bad header {header!r}") from exc
