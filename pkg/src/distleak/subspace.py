"""Recovery from fewer observations than dimensions via a population basis.

Embedding populations concentrate near a low-dimensional subspace. An
uncentered truncated SVD of auxiliary samples gives a basis V (orthonormal
columns) and spectrum sigma; writing the unknown as x = V sigma t + delta
and dropping delta turns m >= rank squared-distance observations into the
same scalar-quadratic problem as the full solver, with the matrix inverse
replaced by a pseudo-inverse. The recovered candidate is the basis
projection of the least-squares solution, so its error is bounded below by
how far the victim actually sits from the subspace.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .embeddings import Embedding, as_matrix, normalize
from .errors import (
    DimensionMismatchError,
    MalformedFileError,
    ProbeSpanError,
    UnderdeterminedError,
    ZeroVectorError,
)
from .exact import (
    RANK_RTOL,
    RecoveryCandidates,
    _equation_residual,
    _quadratic_roots,
    _svd_pinv,
)


@dataclass(frozen=True, eq=False)
class SvdBasis:
    """Truncated uncentered SVD of a sample population."""

    v: np.ndarray  # (ambient_dim, rank), orthonormal columns
    sigma: np.ndarray  # (rank,), non-increasing, positive
    ambient_dim: int
    rank: int
    training_count: int

    def __post_init__(self):
        v = np.array(self.v, dtype=np.float64, copy=True)
        sigma = np.array(self.sigma, dtype=np.float64, copy=True)
        if v.shape != (self.ambient_dim, self.rank):
            raise DimensionMismatchError(
                f"basis shape {v.shape} != ({self.ambient_dim}, {self.rank})"
            )
        if sigma.shape != (self.rank,):
            raise DimensionMismatchError("sigma length must equal rank")
        if np.any(sigma <= 0) or np.any(np.diff(sigma) > 0):
            raise ValueError("sigma must be positive and non-increasing")
        gram = v.T @ v
        if not np.allclose(gram, np.eye(self.rank), atol=1e-9):
            raise ValueError("basis columns must be orthonormal")
        v.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "sigma", sigma)

    def project(self, values: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto the basis span."""
        return self.v @ (self.v.T @ values)

    def truncate(self, rank: int) -> "SvdBasis":
        """Keep the leading `rank` directions; a nested cut of the same fit."""
        if not (1 <= rank <= self.rank):
            raise ValueError(f"truncation rank must lie in [1, {self.rank}]")
        if rank == self.rank:
            return self
        return SvdBasis(
            self.v[:, :rank], self.sigma[:rank], self.ambient_dim, rank, self.training_count
        )


@dataclass(frozen=True)
class RankErrorCurve:
    """Mean reconstruction error as a function of truncation rank."""

    ranks: tuple[int, ...]
    mean_errors: tuple[float, ...]

    def __post_init__(self):
        errs = np.asarray(self.mean_errors)
        # ranks come sorted, so nested subspaces force non-increasing error
        if np.any(np.diff(errs) > 1e-9 * max(1.0, float(errs[0]))):
            raise ValueError("mean_errors must be non-increasing in rank")

    def crossing_rank(self, level: float) -> int | None:
        """Smallest rank whose mean error drops below level, if any."""
        for r, e in zip(self.ranks, self.mean_errors):
            if e < level:
                return r
        return None


@dataclass(frozen=True)
class ReducedRecoveryDiagnostics:
    """Error-source breakdown for a reduced recovery."""

    truncation_error: float  # out-of-basis mass of the least-squares solution
    equation_perturbation: float  # equation shift caused by projecting onto the basis
    residual: float  # max abs equation residual of the returned best candidate


def _canonical_signs(v: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return v * signs


def fit_basis(samples: Sequence[Embedding], rank: int) -> SvdBasis:
    """Fit a rank-r uncentered SVD basis to auxiliary samples.

    No mean is subtracted: the linearised distance equations live in the
    raw coordinates, so the basis has to as well. Column signs are
    canonicalised to make the fit deterministic across LAPACK builds.
    """
    m = as_matrix(samples)
    count, dim = m.shape
    if not (1 <= rank <= min(count, dim)):
        raise ValueError(f"rank must lie in [1, min(count={count}, dim={dim})]")
    _, s, vt = np.linalg.svd(m, full_matrices=False)
    if s[rank - 1] <= RANK_RTOL * s[0]:
        raise ValueError(
            f"samples have effective rank below {rank}; reduce the requested rank"
        )
    v = _canonical_signs(vt[:rank].T)
    return SvdBasis(v, s[:rank], dim, rank, count)


def rank_error_curve(samples: Sequence[Embedding], ranks: Sequence[int]) -> RankErrorCurve:
    """Mean projection error of the samples at each truncation rank.

    All ranks are evaluated from one SVD, so the subspaces are nested and
    the curve is non-increasing by construction.
    """
    if not samples:
        raise ValueError("need at least one sample")
    rank_list = [int(r) for r in ranks]
    if not rank_list:
        raise ValueError("need at least one rank")
    if any(rank_list[i] > rank_list[i + 1] for i in range(len(rank_list) - 1)):
        raise ValueError("ranks must be sorted ascending")
    m = as_matrix(samples)
    count, dim = m.shape
    max_rank = min(count, dim)
    if rank_list[-1] > max_rank or rank_list[0] < 1:
        raise ValueError(f"ranks must lie in [1, {max_rank}]")
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    # squared residual of sample i at rank k is the tail sum of (u_ij s_j)^2
    coeff_sq = (u * s) ** 2
    tail = np.concatenate(
        [np.cumsum(coeff_sq[:, ::-1], axis=1)[:, ::-1], np.zeros((count, 1))], axis=1
    )
    means = []
    for r in rank_list:
        # clip guards tiny negative dust from the reversed cumsum
        means.append(float(np.mean(np.sqrt(np.clip(tail[:, r], 0.0, None)))))
    return RankErrorCurve(tuple(rank_list), tuple(means))


def reduced_l2_recover(
    probes: Sequence[Embedding],
    sq_distances: Sequence[float],
    basis: SvdBasis,
    infeasible_vertex: bool = False,
) -> tuple[RecoveryCandidates, ReducedRecoveryDiagnostics]:
    """Recover basis-constrained candidates from m >= rank squared distances.

    The least-squares solution of the linearised system is computed with a
    pseudo-inverse, the scalar quadratic in z = x.x is solved exactly as in
    the full-rank case, and each root's solution is projected onto the
    basis. With m = dim independent probes and a full-rank basis this
    reduces to the exact solver. infeasible_vertex falls back to the
    closest-to-feasible scale instead of raising when heavily perturbed
    distances push the discriminant negative.
    """
    x = as_matrix(probes)
    m, dim = x.shape
    if dim != basis.ambient_dim:
        raise DimensionMismatchError(
            f"probe dim {dim} != basis ambient dim {basis.ambient_dim}"
        )
    if m < basis.rank:
        raise UnderdeterminedError(
            f"{m} observations cannot pin down a rank-{basis.rank} subspace"
        )
    d2 = np.asarray(sq_distances, dtype=np.float64)
    if d2.shape != (m,):
        raise DimensionMismatchError(f"expected {m} distances, got {d2.shape}")
    if np.any(d2 < 0) or not np.all(np.isfinite(d2)):
        raise ValueError("squared distances must be finite and non-negative")
    a_mat = -2.0 * x
    a_pinv, cond, rank = _svd_pinv(a_mat)
    if rank < basis.rank:
        raise ProbeSpanError(
            f"probe matrix effective rank {rank} < basis rank {basis.rank}; "
            "the probes do not span the subspace"
        )
    d_vec = np.einsum("ij,ij->i", x, x) - d2
    ones = np.ones(m)
    b_ones = a_pinv.T @ (a_pinv @ ones)
    b_d = a_pinv.T @ (a_pinv @ d_vec)
    a = float(ones @ b_ones)
    b = float(ones @ b_d + d_vec @ b_ones - 1.0)
    c = float(d_vec @ b_d)
    roots = _quadratic_roots(a, b, c, infeasible_vertex=infeasible_vertex)

    cands, resids = [], []
    trunc = eq_shift = 0.0
    for z in roots:
        raw = -a_pinv @ (d_vec + z * ones)
        proj = basis.project(raw)
        cands.append(Embedding(proj))
        resids.append(_equation_residual(proj, a_mat, d_vec))
        trunc = max(trunc, float(np.linalg.norm(raw - proj)))
        eq_shift = max(eq_shift, float(np.linalg.norm(a_mat @ (raw - proj))))
    result = RecoveryCandidates(tuple(cands), tuple(resids), cond)
    diags = ReducedRecoveryDiagnostics(trunc, eq_shift, min(resids))
    return result, diags


def reduced_cosine_recover(
    probes: Sequence[Embedding],
    cos_distances: Sequence[float],
    basis: SvdBasis,
) -> Embedding:
    """Direction recovery restricted to the basis, via least squares.

    Solves (normalised probes) @ V w = 1 - d for the basis coordinates w of
    the unknown direction and returns the unit-normalised V w.
    """
    x = as_matrix(probes)
    m, dim = x.shape
    if dim != basis.ambient_dim:
        raise DimensionMismatchError(
            f"probe dim {dim} != basis ambient dim {basis.ambient_dim}"
        )
    if m < basis.rank:
        raise UnderdeterminedError(
            f"{m} observations cannot pin down a rank-{basis.rank} subspace"
        )
    d = np.asarray(cos_distances, dtype=np.float64)
    if d.shape != (m,):
        raise DimensionMismatchError(f"expected {m} distances, got {d.shape}")
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVectorError("probes must be nonzero under the cosine metric")
    a_mat = x / norms[:, None]
    g = a_mat @ basis.v
    g_pinv, _, rank = _svd_pinv(g)
    if rank < basis.rank:
        raise ProbeSpanError(
            f"projected probe matrix effective rank {rank} < basis rank {basis.rank}"
        )
    w = g_pinv @ (1.0 - d)
    u = basis.v @ w
    if np.linalg.norm(u) < 1e-12:
        raise ZeroVectorError("recovered direction collapsed to zero")
    return normalize(Embedding(u))


def save_basis(basis: SvdBasis, path: str | Path) -> None:
    """Persist a basis as JSON; floats round-trip exactly."""
    payload = {
        "ambient_dim": basis.ambient_dim,
        "rank": basis.rank,
        "training_count": basis.training_count,
        "sigma": [float(s) for s in basis.sigma],
        "v": [[float(x) for x in row] for row in basis.v],
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_basis(path: str | Path) -> SvdBasis:
    """Load a basis saved by save_basis."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return SvdBasis(
            np.array(payload["v"], dtype=np.float64),
            np.array(payload["sigma"], dtype=np.float64),
            int(payload["ambient_dim"]),
            int(payload["rank"]),
            int(payload["training_count"]),
        )
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise MalformedFileError(f"cannot load basis from {path}: {exc}") from exc
