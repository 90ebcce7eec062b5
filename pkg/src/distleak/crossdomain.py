"""Attacks that borrow distances leaked by a different embedding model.

The system being attacked and the attacker's own model embed the same
underlying subjects into different spaces. Both domains are simulated as a
fixed elementwise nonlinearity on a shared latent followed by a fixed
full-rank linear map. Leaked system-domain distances are converted to
attacker-domain distances by an affine calibration fitted on auxiliary
pairs, then fed to the subspace solver with a basis grown to match the
observation budget. Because every borrowed distance carries conversion
error, using more of them eventually hurts: the error curve over the
budget is U-shaped, unlike the single-domain case where it only improves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .embeddings import Embedding, Metric, distance
from .errors import (
    CalibrationError,
    DegenerateGeometryError,
    DimensionMismatchError,
    InfeasibleDistancesError,
)
from .exact import RANK_RTOL
from .pipeline import Solver, SweepResult, _check_acceptance_consistency
from .subspace import fit_basis, reduced_l2_recover

# per-component latent scales: steep enough that the first components carry
# most of the energy (small bases already explain the population), with a
# floor so the tail stays numerically above the solvers' rank cutoff
LATENT_TOP = 1.2
LATENT_DECAY = 0.85
LATENT_FLOOR = 5e-4
DEFAULT_JUDGER_THRESHOLD = 1.2

# "related" maps: system map rotated orthogonally, blended with this much
# independent weight, and rescaled; mirrors how separately trained models
# of the same modality correlate without matching
RELATED_MIX = 0.2
RELATED_GAIN = 1.25


@dataclass(frozen=True, eq=False)
class DomainMap:
    """Latent -> embedding map: elementwise tanh, then a full-rank matrix."""

    weight: np.ndarray  # (domain_dim, latent_dim)

    def __post_init__(self):
        w = np.array(self.weight, dtype=np.float64, copy=True)
        if w.ndim != 2:
            raise ValueError("weight must be a matrix")
        s = np.linalg.svd(w, compute_uv=False)
        if s[-1] <= RANK_RTOL * s[0]:
            raise ValueError("domain map must be full rank")
        w.setflags(write=False)
        object.__setattr__(self, "weight", w)

    @property
    def latent_dim(self) -> int:
        return int(self.weight.shape[1])

    @property
    def domain_dim(self) -> int:
        return int(self.weight.shape[0])

    def embed(self, latents: np.ndarray) -> list[Embedding]:
        """Embed latent rows; returns one embedding per row."""
        z = np.atleast_2d(np.asarray(latents, dtype=np.float64))
        if z.shape[1] != self.latent_dim:
            raise DimensionMismatchError(
                f"latent dim {z.shape[1]} != map latent dim {self.latent_dim}"
            )
        out = np.tanh(z) @ self.weight.T
        return [Embedding(row) for row in out]


@dataclass(frozen=True)
class AffineCalibration:
    """Attacker-side distance conversion: d_att ~ gain * d_sys + offset."""

    gain: float
    offset: float

    def apply(self, d: np.ndarray) -> np.ndarray:
        return np.maximum(self.gain * np.asarray(d) + self.offset, 0.0)


@dataclass(frozen=True, eq=False)
class CrossDomainConfig:
    """Two domains over a shared latent plus the fitted distance calibration."""

    latent_dim: int
    system_map: DomainMap
    attacker_map: DomainMap
    seed: int
    calibration: AffineCalibration | None = None

    def __post_init__(self):
        if self.system_map.latent_dim != self.latent_dim:
            raise DimensionMismatchError("system map latent dim mismatch")
        if self.attacker_map.latent_dim != self.latent_dim:
            raise DimensionMismatchError("attacker map latent dim mismatch")


def _random_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))


def make_cross_domain_config(
    latent_dim: int,
    domain_dim: int,
    seed: int,
    relation: str = "related",
    mix: float = RELATED_MIX,
) -> CrossDomainConfig:
    """Build a seeded two-domain setup.

    relation picks how the attacker's model relates to the system's:
    "related" (rotated, partially independent, rescaled: genuinely
    different models of the same modality), "independent" (nothing shared
    beyond the latent), "identical" (the degenerate single-domain case), or
    "orthogonal" (same map up to a rotation, so L2 distances transfer
    exactly). mix controls the independent fraction of a "related" map.
    """
    rng = np.random.default_rng(seed)
    w_sys = rng.standard_normal((domain_dim, latent_dim)) / math.sqrt(latent_dim)
    if relation == "related":
        fresh = rng.standard_normal((domain_dim, latent_dim)) / math.sqrt(latent_dim)
        rot = _random_orthogonal(domain_dim, rng)
        w_att = RELATED_GAIN * (rot @ w_sys + mix * fresh) / math.sqrt(1.0 + mix * mix)
    elif relation == "independent":
        w_att = rng.standard_normal((domain_dim, latent_dim)) / math.sqrt(latent_dim)
    elif relation == "identical":
        w_att = w_sys
    elif relation == "orthogonal":
        w_att = _random_orthogonal(domain_dim, rng) @ w_sys
    else:
        raise ValueError(f"unknown relation {relation!r}")
    return CrossDomainConfig(latent_dim, DomainMap(w_sys), DomainMap(w_att), seed)


def latent_scales(latent_dim: int) -> np.ndarray:
    """Descending per-component latent scales shared by both domains."""
    return np.maximum(
        LATENT_TOP * LATENT_DECAY ** np.arange(latent_dim), LATENT_TOP * LATENT_FLOOR
    )


def sample_latents(count: int, latent_dim: int, seed: int) -> np.ndarray:
    """Draw seeded latent subjects with a decaying per-component spectrum."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((count, latent_dim)) * latent_scales(latent_dim)


def fit_distance_calibration(
    config: CrossDomainConfig, aux_latents: np.ndarray
) -> AffineCalibration:
    """Least-squares affine fit from system distances to attacker distances.

    Uses every pair of auxiliary subjects. Only data the attacker can see
    goes in: her own embeddings of the pairs and the distances the system
    leaks for them.
    """
    z = np.atleast_2d(np.asarray(aux_latents, dtype=np.float64))
    if z.shape[0] < 3:
        raise CalibrationError("need at least 3 auxiliary subjects")
    sys_e = np.stack([e.values for e in config.system_map.embed(z)])
    att_e = np.stack([e.values for e in config.attacker_map.embed(z)])
    iu = np.triu_indices(z.shape[0], k=1)
    d_sys = np.linalg.norm(sys_e[iu[0]] - sys_e[iu[1]], axis=1)
    d_att = np.linalg.norm(att_e[iu[0]] - att_e[iu[1]], axis=1)
    if float(np.std(d_sys)) < 1e-12:
        raise CalibrationError("system distances carry no spread to fit against")
    design = np.stack([d_sys, np.ones_like(d_sys)], axis=1)
    (gain, offset), *_ = np.linalg.lstsq(design, d_att, rcond=None)
    return AffineCalibration(float(gain), float(offset))


def cross_domain_attack(
    config: CrossDomainConfig,
    victim_latents: np.ndarray,
    probe_latents: np.ndarray,
    aux_latents: np.ndarray,
    counts: Sequence[int],
    judger_threshold: float = DEFAULT_JUDGER_THRESHOLD,
) -> SweepResult:
    """Attack victims in the attacker's domain using borrowed distances.

    For each observation budget m the attacker fits a rank-min(m, cap)
    basis to her auxiliary embeddings, calibrates the m leaked system
    distances into her domain, and solves the reduced system. Errors and
    the judger decision are both measured in the attacker domain.
    """
    for c in counts:
        if c < 1:
            raise ValueError(f"observation count {c} must be positive")
        if c > np.atleast_2d(probe_latents).shape[0]:
            raise ValueError(f"observation count {c} exceeds probe count")
    cal = config.calibration or fit_distance_calibration(config, aux_latents)
    victims = np.atleast_2d(np.asarray(victim_latents, dtype=np.float64))
    sys_victims = config.system_map.embed(victims)
    att_victims = config.attacker_map.embed(victims)
    sys_probes = config.system_map.embed(probe_latents)
    att_probes = config.attacker_map.embed(probe_latents)
    aux_emb = config.attacker_map.embed(aux_latents)
    aux_mat = np.stack([e.values for e in aux_emb])
    svals = np.linalg.svd(aux_mat, compute_uv=False)
    rank_cap = int(np.count_nonzero(svals > RANK_RTOL * svals[0]))
    probe_mat = np.stack([e.values for e in att_probes])

    med, rates, all_errors, all_jd = [], [], [], []
    for m in counts:
        # the basis can only be as rich as both the auxiliary population
        # and the probe set actually span
        pvals = np.linalg.svd(probe_mat[: int(m)], compute_uv=False)
        probe_rank = int(np.count_nonzero(pvals > RANK_RTOL * pvals[0]))
        basis = fit_basis(aux_emb, min(int(m), rank_cap, probe_rank))
        errs, jds = [], []
        for sv, av in zip(sys_victims, att_victims):
            d_sys = np.array(
                [distance(p, sv, Metric.L2) for p in sys_probes[: int(m)]]
            )
            borrowed = cal.apply(d_sys)
            try:
                # borrowed distances carry conversion error, so let the
                # quadratic degrade to its vertex instead of failing
                result, _ = reduced_l2_recover(
                    att_probes[: int(m)], borrowed**2, basis, infeasible_vertex=True
                )
                best = result.best()
                err = distance(best, av, Metric.L2)
            except (InfeasibleDistancesError, DegenerateGeometryError):
                err = math.inf
            errs.append(err)
            jds.append(err)  # judger works in the attacker domain on the same metric
        med.append(float(np.median(errs)))
        rates.append(float(np.mean([e <= judger_threshold for e in errs])))
        all_errors.append(tuple(errs))
        all_jd.append(tuple(jds))
    result = SweepResult(
        tuple(int(c) for c in counts),
        tuple(med),
        tuple(rates),
        tuple(all_errors),
        tuple(all_jd),
        judger_threshold,
    )
    _check_acceptance_consistency(result)
    return result
