"""Authentication oracle that leaks a rounded view of the match distance.

The system under attack enrolls one embedding per identity and, on every
authentication attempt, displays a transformed and rounded version of the
true distance alongside the accept/reject decision. The display transform
is public; the attacker inverts it to turn screen values back into
distances. Every attempt is appended to a transcript.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator

import numpy as np

from .embeddings import Embedding, Metric, distance
from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    MalformedFileError,
    UnknownIdError,
)

MAX_DECIMALS = 17


class DisplayMode(str, Enum):
    """How the UI renders the match distance."""

    RAW_DISTANCE = "raw"
    ONE_MINUS_DISTANCE = "one-minus"
    PERCENT = "percent"


@dataclass(frozen=True)
class OracleConfig:
    """Behavioural knobs of the authentication system."""

    metric: Metric = Metric.COSINE
    threshold: float = 0.63
    display_mode: DisplayMode = DisplayMode.ONE_MINUS_DISTANCE
    display_decimals: int = 4
    noise_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if not (0 <= self.display_decimals <= MAX_DECIMALS):
            raise ValueError(f"display_decimals must lie in [0, {MAX_DECIMALS}]")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be non-negative")


def display_transform(d: float, mode: DisplayMode) -> float:
    """Map a distance to its on-screen value (before rounding)."""
    if mode == DisplayMode.RAW_DISTANCE:
        return d
    if mode == DisplayMode.ONE_MINUS_DISTANCE:
        return 1.0 - d
    return 100.0 * (1.0 - d)


def invert_display(value: float, mode: DisplayMode) -> float:
    """Attacker-side inverse of display_transform."""
    if mode == DisplayMode.RAW_DISTANCE:
        return value
    if mode == DisplayMode.ONE_MINUS_DISTANCE:
        return 1.0 - value
    return 1.0 - value / 100.0


@dataclass(frozen=True)
class AuthResponse:
    """Outcome of one authentication attempt."""

    accepted: bool
    displayed_value: float
    attempt_index: int


@dataclass(frozen=True)
class TranscriptEntry:
    """One transcript line: what the attacker saw on attempt k."""

    attempt: int
    claimed_id: str
    probe_id: str
    displayed: float
    accepted: bool


class EnrollmentDb:
    """Enrolled identities plus the append-only attempt transcript.

    Enrolment and transcript appends are serialised with a lock; everything
    else is read-only, so concurrent authentications are safe.
    """

    def __init__(self, metric: Metric = Metric.COSINE):
        self.metric = metric
        self.dim: int | None = None
        self._embeddings: dict[str, Embedding] = {}
        self._entries: list[TranscriptEntry] = []
        self._rng: np.random.Generator | None = None
        self._lock = threading.Lock()

    def __contains__(self, victim_id: str) -> bool:
        return victim_id in self._embeddings

    def __len__(self) -> int:
        return len(self._embeddings)

    def ids(self) -> Iterator[str]:
        return iter(self._embeddings)

    def enrolled(self, victim_id: str) -> Embedding:
        """Harness-side access to the stored embedding (ground truth)."""
        try:
            return self._embeddings[victim_id]
        except KeyError:
            raise UnknownIdError(victim_id) from None


def enroll(db: EnrollmentDb, victim_id: str, embedding: Embedding) -> None:
    """Register an identity. Duplicate ids and dimension drift are errors."""
    with db._lock:
        if victim_id in db._embeddings:
            raise DuplicateIdError(f"{victim_id!r} is already enrolled")
        if db.dim is not None and embedding.dim != db.dim:
            raise DimensionMismatchError(
                f"embedding dim {embedding.dim} != enrolled dim {db.dim}"
            )
        db._embeddings[victim_id] = embedding
        db.dim = embedding.dim


def authenticate(
    db: EnrollmentDb,
    config: OracleConfig,
    claimed_id: str,
    probe: Embedding,
    probe_id: str = "",
) -> AuthResponse:
    """Run one attempt: compare, optionally jitter, round, display, log.

    Noise (when enabled) perturbs the distance before both the threshold
    comparison and the display, modelling a noise defence applied inside
    the system. Rounding affects only the display. An unknown claimed_id
    is an error, not a rejection, mirroring systems that distinguish the
    two.
    """
    if claimed_id not in db._embeddings:
        raise UnknownIdError(claimed_id)
    enrolled = db._embeddings[claimed_id]
    d = distance(probe, enrolled, metric=config.metric)
    with db._lock:
        if config.noise_scale > 0:
            if db._rng is None:
                db._rng = np.random.default_rng(config.seed)
            d = d + config.noise_scale * float(db._rng.standard_normal())
        accepted = d <= config.threshold
        displayed = round(display_transform(d, config.display_mode), config.display_decimals)
        attempt = len(db._entries)
        db._entries.append(
            TranscriptEntry(attempt, claimed_id, probe_id or f"probe{attempt}", displayed, accepted)
        )
    return AuthResponse(accepted, displayed, attempt)


def transcript(db: EnrollmentDb) -> list[TranscriptEntry]:
    """Snapshot of the attempt log, in order."""
    with db._lock:
        return list(db._entries)


def save_transcript(entries: list[TranscriptEntry], path: str | Path) -> None:
    """Append-friendly JSONL serialisation of a transcript."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(_entry_json(e) + "\n")


def append_transcript(entry: TranscriptEntry, path: str | Path) -> None:
    """Append a single attempt to a transcript file."""
    with Path(path).open("a", encoding="utf-8") as fh:
        fh.write(_entry_json(entry) + "\n")


def _entry_json(e: TranscriptEntry) -> str:
    return json.dumps(
        {
            "attempt": e.attempt,
            "claimed_id": e.claimed_id,
            "probe_id": e.probe_id,
            "displayed": e.displayed,
            "accepted": e.accepted,
        }
    )


def load_transcript(path: str | Path) -> list[TranscriptEntry]:
    """Parse a transcript JSONL file."""
    entries = []
    try:
        for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
            if not line.strip():
                continue
            rec = json.loads(line)
            entries.append(
                TranscriptEntry(
                    int(rec["attempt"]),
                    str(rec["claimed_id"]),
                    str(rec["probe_id"]),
                    float(rec["displayed"]),
                    bool(rec["accepted"]),
                )
            )
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise MalformedFileError(f"cannot load transcript from {path}: {exc}") from exc
    return entries


# ---------------------------------------------------------------------------
# Whole-oracle persistence for the CLI: config plus enrolled embeddings in
# one JSON document. The transcript lives in a sibling JSONL file so that
# auth attempts append instead of rewriting the database.
# ---------------------------------------------------------------------------


def save_oracle(db: EnrollmentDb, config: OracleConfig, path: str | Path) -> None:
    payload = {
        "config": {
            "metric": config.metric.value,
            "threshold": config.threshold,
            "display_mode": config.display_mode.value,
            "display_decimals": config.display_decimals,
            "noise_scale": config.noise_scale,
            "seed": config.seed,
        },
        "victims": {vid: [float(v) for v in emb.values] for vid, emb in db._embeddings.items()},
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_oracle(path: str | Path) -> tuple[EnrollmentDb, OracleConfig]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        cfg = payload["config"]
        config = OracleConfig(
            metric=Metric(cfg["metric"]),
            threshold=float(cfg["threshold"]),
            display_mode=DisplayMode(cfg["display_mode"]),
            display_decimals=int(cfg["display_decimals"]),
            noise_scale=float(cfg["noise_scale"]),
            seed=int(cfg["seed"]),
        )
        db = EnrollmentDb(metric=config.metric)
        for vid, values in payload["victims"].items():
            enroll(db, vid, Embedding(np.array(values, dtype=np.float64)))
        return db, config
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise MalformedFileError(f"cannot load oracle from {path}: {exc}") from exc
