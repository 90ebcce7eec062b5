"""Exact recovery of an unknown embedding from leaked distances.

Given n probes x_1..x_n in R^n and the squared Euclidean distance d_i^2 from
each probe to an unknown x, expanding |x - x_i|^2 = d_i^2 gives

    x.x - 2 x_i.x + (x_i.x_i - d_i^2) = 0        for every i,

or in matrix form  z*1 + A x + D = 0  with  A = -2 [x_1 .. x_n]^T,
D_i = x_i.x_i - d_i^2, and the unknown scalar z = x.x. Solving the linear
part for x in terms of z and substituting back into z = x.x yields a scalar
quadratic a z^2 + b z + c = 0 with

    B = (A^-1)^T A^-1,   a = 1^T B 1,   b = 1^T B D + D^T B 1 - 1,
    c = D^T B D,

so the whole system collapses to at most two closed-form candidates
x = -A^-1 (D + z 1), one per real root. For cosine distances the norm of x
is unobservable and a single linear solve recovers the direction.

Inversion goes through an SVD so that near-singular probe sets are detected
and noisy systems degrade to least squares instead of blowing up.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .embeddings import Embedding, as_matrix, normalize
from .errors import (
    ArityError,
    DegenerateGeometryError,
    DimensionMismatchError,
    InfeasibleDistancesError,
    NonDiscriminatingProbeError,
    RankDeficientError,
    ZeroVectorError,
)

# singular values below RANK_RTOL * sigma_max count as zero
RANK_RTOL = 1e-10
# |a| below this is treated as a vanishing quadratic leading coefficient
TINY_LEAD = 1e-14
# discriminants within this relative band of zero clamp to a double root
DISC_RTOL = 1e-10
# margin below which an extra probe cannot separate two candidates
MARGIN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class L2System:
    """Linearised squared-distance system z*1 + A x + D = 0."""

    a_mat: np.ndarray  # (n, n), row i is -2 * probe_i
    d_vec: np.ndarray  # (n,), probe_i.probe_i - d_i^2
    b_mat: np.ndarray  # pinv(A)^T pinv(A)
    a_pinv: np.ndarray
    condition: float
    probe_ids: tuple[str, ...]

    @property
    def dim(self) -> int:
        return int(self.a_mat.shape[1])


@dataclass(frozen=True)
class NormQuadratic:
    """Coefficients and real roots of the squared-norm quadratic."""

    a: float
    b: float
    c: float
    roots_z: tuple[float, ...]  # ascending, length 1 or 2


@dataclass(frozen=True, eq=False)
class RecoveryCandidates:
    """Candidate embeddings with per-candidate equation residuals."""

    candidates: tuple[Embedding, ...]
    residuals: tuple[float, ...]  # max abs residual of the defining equations
    condition: float

    def best(self) -> Embedding:
        return self.candidates[int(np.argmin(self.residuals))]


def _svd_pinv(m: np.ndarray) -> tuple[np.ndarray, float, int]:
    """Pseudo-inverse, condition estimate, and effective rank of m."""
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[1], m.shape[0])), math.inf, 0
    cutoff = RANK_RTOL * s[0]
    keep = s > cutoff
    rank = int(np.count_nonzero(keep))
    inv_s = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    pinv = (vt.T * inv_s) @ u.T
    smallest = s[keep][-1] if rank else 0.0
    cond = float(s[0] / smallest) if rank else math.inf
    return pinv, cond, rank


def build_l2_system(
    probes: Sequence[Embedding],
    sq_distances: Sequence[float],
    probe_ids: Sequence[str] | None = None,
) -> L2System:
    """Assemble the linearised system for n probes in dimension n.

    Requires exactly dim probes (anything else belongs to the subspace
    solver) and a numerically full-rank probe matrix.
    """
    x = as_matrix(probes)
    m, n = x.shape
    if m != n:
        raise ArityError(
            f"exact recovery needs dim={n} probes, got {m}; "
            "use the subspace solver for other counts"
        )
    d2 = np.asarray(sq_distances, dtype=np.float64)
    if d2.shape != (m,):
        raise DimensionMismatchError(f"expected {m} distances, got {d2.shape}")
    if np.any(d2 < 0) or not np.all(np.isfinite(d2)):
        raise ValueError("squared distances must be finite and non-negative")
    a_mat = -2.0 * x
    a_pinv, cond, rank = _svd_pinv(a_mat)
    if rank < n:
        raise RankDeficientError(
            f"probe matrix has effective rank {rank} < {n}; probes must be independent"
        )
    d_vec = np.einsum("ij,ij->i", x, x) - d2
    b_mat = a_pinv.T @ a_pinv
    ids = tuple(probe_ids) if probe_ids is not None else tuple(f"p{i}" for i in range(m))
    if len(ids) != m:
        raise ValueError("probe_ids must match probe count")
    return L2System(a_mat, d_vec, b_mat, a_pinv, cond, ids)


def _quadratic_roots(
    a: float, b: float, c: float, infeasible_vertex: bool = False
) -> tuple[float, ...]:
    """Real roots of a z^2 + b z + c, ascending; degenerate cases raise.

    infeasible_vertex swaps the negative-discriminant error for the vertex
    -b/2a, the scale closest to satisfying the equations; solvers fed
    heavily perturbed distances use it to stay least-squares instead of
    failing outright.
    """
    if abs(a) < TINY_LEAD:
        if abs(b) < TINY_LEAD:
            raise DegenerateGeometryError(
                "quadratic degenerated to a constant; solution scale unconstrained"
            )
        return (-c / b,)
    disc = b * b - 4.0 * a * c
    band = DISC_RTOL * max(b * b, abs(4.0 * a * c))
    if disc < 0.0:
        if disc >= -band or infeasible_vertex:
            disc = 0.0
        else:
            raise InfeasibleDistancesError(
                f"negative discriminant {disc:.3e}: distances admit no real solution"
            )
    if disc == 0.0:
        return (-b / (2.0 * a),)
    sq = math.sqrt(disc)
    # Citardauq-style split avoids cancellation when b dominates
    q = -0.5 * (b + math.copysign(sq, b)) if b != 0.0 else 0.5 * sq
    r1, r2 = q / a, (c / q if q != 0.0 else -b / a)
    lo, hi = (r1, r2) if r1 <= r2 else (r2, r1)
    return (lo, hi)


def solve_norm_quadratic(system: L2System) -> NormQuadratic:
    """Collapse the system to the scalar quadratic in z = x.x and solve it."""
    ones = np.ones(system.d_vec.shape[0])
    b_ones = system.b_mat @ ones
    b_d = system.b_mat @ system.d_vec
    a = float(ones @ b_ones)
    b = float(ones @ b_d + system.d_vec @ b_ones - 1.0)
    c = float(system.d_vec @ b_d)
    roots = _quadratic_roots(a, b, c)
    return NormQuadratic(a, b, c, roots)


def _equation_residual(x: np.ndarray, a_mat: np.ndarray, d_vec: np.ndarray) -> float:
    """Max abs residual of z*1 + A x + D at z = x.x."""
    r = float(x @ x) + a_mat @ x + d_vec
    return float(np.max(np.abs(r)))


def _polish(x0: np.ndarray, a_mat: np.ndarray, d_vec: np.ndarray, iters: int = 4) -> np.ndarray:
    """Gauss-Newton refinement of a candidate on the raw sphere equations.

    The closed-form root goes through B = (A^-1)^T A^-1, which squares the
    condition number; near-tangent sphere configurations then lose half the
    mantissa to cancellation in the discriminant. A few least-squares Newton
    steps on F(x) = z*1 + A x + D recover full precision because they only
    ever face the condition of A itself. Keeps the best iterate.
    """
    best, best_res = x0, _equation_residual(x0, a_mat, d_vec)
    x = x0
    for _ in range(iters):
        f = float(x @ x) + a_mat @ x + d_vec
        jac = a_mat + 2.0 * x  # row i: -2 x_i + 2 x
        step, *_ = np.linalg.lstsq(jac, -f, rcond=None)
        x = x + step
        res = _equation_residual(x, a_mat, d_vec)
        if res < best_res:
            best, best_res = x, res
        if res < 1e-14 * max(1.0, float(np.max(np.abs(d_vec)))):
            break
    return best


def l2_recover(system: L2System, refine: bool = True) -> RecoveryCandidates:
    """Recover candidate embeddings, one per root of the norm quadratic.

    With refine=True (the default) each closed-form candidate is polished
    with a few Gauss-Newton steps; the root set itself is untouched.
    """
    quad = solve_norm_quadratic(system)
    ones = np.ones(system.d_vec.shape[0])
    cands, resids = [], []
    for z in quad.roots_z:
        x = -system.a_pinv @ (system.d_vec + z * ones)
        if refine:
            x = _polish(x, system.a_mat, system.d_vec)
        cands.append(Embedding(x))
        resids.append(_equation_residual(x, system.a_mat, system.d_vec))
    return RecoveryCandidates(tuple(cands), tuple(resids), system.condition)


def cosine_recover(
    probes: Sequence[Embedding], cos_distances: Sequence[float]
) -> Embedding:
    """Recover the direction of x from n cosine distances to n probes.

    Each observation pins one inner product of the unit-normalised unknown:
    (x_i/|x_i|) . (x/|x|) = 1 - d_i. The norm of x is not observable under
    this metric, so the result is always unit length.
    """
    x = as_matrix(probes)
    m, n = x.shape
    if m != n:
        raise ArityError(f"cosine recovery needs dim={n} probes, got {m}")
    d = np.asarray(cos_distances, dtype=np.float64)
    if d.shape != (m,):
        raise DimensionMismatchError(f"expected {m} distances, got {d.shape}")
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVectorError("probes must be nonzero under the cosine metric")
    a_mat = x / norms[:, None]
    a_pinv, _, rank = _svd_pinv(a_mat)
    if rank < n:
        raise RankDeficientError(
            f"normalised probe matrix has effective rank {rank} < {n}"
        )
    u = a_pinv @ (1.0 - d)
    if np.linalg.norm(u) < 1e-12:
        raise ZeroVectorError("recovered direction collapsed to zero")
    return normalize(Embedding(u))


def disambiguate(
    candidates: Sequence[Embedding],
    extra_probe: Embedding,
    extra_sq_distance: float,
) -> tuple[Embedding, float]:
    """Pick between two candidates using one held-out squared distance.

    Returns (winner, margin) where margin is the gap between the two
    candidates' prediction errors; a margin under MARGIN_TOL means the extra
    probe is equidistant from both and cannot decide.
    """
    if len(candidates) != 2:
        raise ValueError(f"disambiguation needs exactly 2 candidates, got {len(candidates)}")
    errs = []
    for cand in candidates:
        if cand.dim != extra_probe.dim:
            raise DimensionMismatchError("extra probe dimension mismatch")
        diff = cand.values - extra_probe.values
        errs.append(abs(float(diff @ diff) - float(extra_sq_distance)))
    margin = abs(errs[0] - errs[1])
    if margin < MARGIN_TOL:
        raise NonDiscriminatingProbeError(
            f"extra probe margin {margin:.3e} cannot separate the candidates"
        )
    return candidates[int(np.argmin(errs))], margin


def dump_system(
    system: L2System,
    quad: NormQuadratic | None = None,
    path: str | Path | None = None,
) -> dict:
    """JSON-friendly dump of (A, D, a, b, c, roots) for debugging."""
    payload: dict = {
        "A": system.a_mat.tolist(),
        "D": system.d_vec.tolist(),
        "condition": system.condition,
        "probe_ids": list(system.probe_ids),
    }
    if quad is not None:
        payload.update(
            {"a": quad.a, "b": quad.b, "c": quad.c, "roots_z": list(quad.roots_z)}
        )
    if path is not None:
        Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return payload
