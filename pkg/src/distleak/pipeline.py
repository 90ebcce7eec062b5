"""End-to-end attack orchestration against a leaky oracle.

The attacker authenticates with probe embeddings she controls, inverts the
display transform to get back distances, and feeds the observations to an
exact or subspace solver. Sweeps repeat the attack across victims and
observation budgets and export `m,median_error,acceptance_rate` curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .embeddings import Embedding, Metric, distance
from .errors import (
    ArityError,
    DegenerateGeometryError,
    InfeasibleDistancesError,
    MalformedFileError,
)
from .exact import build_l2_system, cosine_recover, disambiguate, l2_recover
from .oracle import (
    EnrollmentDb,
    OracleConfig,
    TranscriptEntry,
    authenticate,
    invert_display,
)
from .subspace import SvdBasis, reduced_cosine_recover, reduced_l2_recover

DEFAULT_JUDGER_METRIC = Metric.COSINE
DEFAULT_JUDGER_THRESHOLD = 0.63


class Solver(str, Enum):
    """Recovery strategies the pipeline can dispatch to."""

    EXACT_L2 = "exact-l2"
    EXACT_COSINE = "exact-cos"
    REDUCED_L2 = "reduced-l2"
    REDUCED_COSINE = "reduced-cos"
    CROSS_DOMAIN = "cross-domain"


@dataclass(frozen=True, eq=False)
class Observation:
    """One leaked distance together with the probe that produced it."""

    probe_ref: str
    probe: Embedding
    leaked_distance: float


@dataclass(frozen=True, eq=False)
class ObservationLog:
    """Ordered leaked observations under a single metric."""

    entries: tuple[Observation, ...]
    metric: Metric

    def probes(self) -> list[Embedding]:
        return [o.probe for o in self.entries]

    def distances(self) -> np.ndarray:
        return np.array([o.leaked_distance for o in self.entries])


@dataclass(frozen=True, eq=False)
class AttackReport:
    """What one attack run recovered and how well it did."""

    solver: Solver
    recovered: Embedding
    num_observations: int
    error_to_truth: float  # nan when no ground truth was supplied
    judger_accepted: bool
    judger_threshold: float
    diagnostics: dict


def collect(
    db: EnrollmentDb,
    config: OracleConfig,
    victim_id: str,
    probes: Sequence[Embedding],
    probe_ids: Sequence[str] | None = None,
) -> ObservationLog:
    """Authenticate each probe against the victim and log leaked distances.

    Display values are pushed back through the public inverse transform;
    noise or coarse rounding can nudge a near-zero distance negative, which
    is clamped since distances are non-negative by definition.
    """
    if probe_ids is not None and len(probe_ids) != len(probes):
        raise ValueError("probe_ids must match probes in length")
    entries = []
    for i, probe in enumerate(probes):
        ref = probe_ids[i] if probe_ids is not None else f"probe{i}"
        resp = authenticate(db, config, victim_id, probe, probe_id=ref)
        leaked = invert_display(resp.displayed_value, config.display_mode)
        entries.append(Observation(ref, probe, max(leaked, 0.0)))
    return ObservationLog(tuple(entries), config.metric)


def observations_from_transcript(
    entries: Sequence[TranscriptEntry],
    probes_by_id: dict[str, Embedding],
    config: OracleConfig,
) -> ObservationLog:
    """Rebuild an observation log from a saved transcript.

    Replaying a transcript yields the same observations the attacker had
    live, so recovery results are reproducible from the log alone.
    """
    obs = []
    for e in entries:
        if e.probe_id not in probes_by_id:
            raise KeyError(f"transcript probe {e.probe_id!r} not in probe map")
        leaked = invert_display(e.displayed, config.display_mode)
        obs.append(Observation(e.probe_id, probes_by_id[e.probe_id], max(leaked, 0.0)))
    return ObservationLog(tuple(obs), config.metric)


def _squared_distances(log: ObservationLog) -> np.ndarray:
    if log.metric == Metric.SQUARED_L2:
        return log.distances()
    if log.metric == Metric.L2:
        return log.distances() ** 2
    raise ArityError(f"L2 solvers cannot consume {log.metric.value} observations")


def run_attack(
    log: ObservationLog,
    solver: Solver,
    basis: SvdBasis | None = None,
    extra_observation: Observation | None = None,
    truth: Embedding | None = None,
    judger_metric: Metric = DEFAULT_JUDGER_METRIC,
    judger_threshold: float = DEFAULT_JUDGER_THRESHOLD,
) -> AttackReport:
    """Dispatch one recovery and assemble a report.

    Two-candidate ambiguity is resolved with the extra observation when one
    is supplied, otherwise by the smaller equation residual (flagged in the
    diagnostics). Ground truth is harness-side only: it feeds the error and
    judger fields and never reaches the solver.
    """
    probes = log.probes()
    diagnostics: dict = {"metric": log.metric.value}
    if solver == Solver.CROSS_DOMAIN:
        raise ArityError("cross-domain attacks run through cross_domain_attack")
    if not probes:
        raise ArityError("cannot attack with an empty observation log")

    if solver == Solver.EXACT_L2 and extra_observation is None and probes:
        # an (n+1)-th observation only has one job: breaking the two-point tie
        if len(probes) == probes[0].dim + 1:
            extra_observation = log.entries[-1]
            log = ObservationLog(log.entries[:-1], log.metric)
            probes = log.probes()

    if solver == Solver.EXACT_L2:
        system = build_l2_system(probes, _squared_distances(log), [o.probe_ref for o in log.entries])
        result = l2_recover(system)
        candidates, residuals = list(result.candidates), list(result.residuals)
        diagnostics["condition"] = result.condition
    elif solver == Solver.EXACT_COSINE:
        if log.metric != Metric.COSINE:
            raise ArityError("exact-cos requires cosine observations")
        rec = cosine_recover(probes, log.distances())
        candidates, residuals = [rec], [_cosine_residual(probes, log.distances(), rec)]
    elif solver == Solver.REDUCED_L2:
        if basis is None:
            raise ValueError("reduced-l2 requires a basis")
        result, diags = reduced_l2_recover(probes, _squared_distances(log), basis)
        candidates, residuals = list(result.candidates), list(result.residuals)
        diagnostics["condition"] = result.condition
        diagnostics["truncation_error"] = diags.truncation_error
        diagnostics["equation_perturbation"] = diags.equation_perturbation
    elif solver == Solver.REDUCED_COSINE:
        if basis is None:
            raise ValueError("reduced-cos requires a basis")
        if log.metric != Metric.COSINE:
            raise ArityError("reduced-cos requires cosine observations")
        rec = reduced_cosine_recover(probes, log.distances(), basis)
        candidates, residuals = [rec], [_cosine_residual(probes, log.distances(), rec)]
    else:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unknown solver {solver}")

    diagnostics["num_candidates"] = len(candidates)
    diagnostics["residuals"] = residuals
    if len(candidates) == 2:
        if extra_observation is not None:
            sq = (
                extra_observation.leaked_distance**2
                if log.metric == Metric.L2
                else extra_observation.leaked_distance
            )
            recovered, margin = disambiguate(candidates, extra_observation.probe, sq)
            diagnostics["disambiguation_margin"] = margin
        else:
            recovered = candidates[int(np.argmin(residuals))]
            diagnostics["ambiguous"] = True
    else:
        recovered = candidates[0]

    error = math.nan
    judger_accepted = False
    if truth is not None:
        err_metric = Metric.COSINE if solver in (Solver.EXACT_COSINE, Solver.REDUCED_COSINE) else Metric.L2
        error = distance(recovered, truth, err_metric)
        judger_distance = distance(recovered, truth, judger_metric)
        judger_accepted = judger_distance <= judger_threshold
        diagnostics["judger_distance"] = judger_distance
    return AttackReport(
        solver,
        recovered,
        len(log.entries),
        error,
        judger_accepted,
        judger_threshold,
        diagnostics,
    )


def _cosine_residual(probes: Sequence[Embedding], d: np.ndarray, rec: Embedding) -> float:
    rows = np.stack([p.values / np.linalg.norm(p.values) for p in probes])
    return float(np.max(np.abs(rows @ rec.values - (1.0 - np.asarray(d)))))


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Attack quality as a function of observation budget."""

    counts: tuple[int, ...]
    median_errors: tuple[float, ...]
    acceptance_rates: tuple[float, ...]
    # per count: per-victim error and judger distance, for diagnostics
    errors: tuple[tuple[float, ...], ...] = field(default=(), repr=False)
    judger_distances: tuple[tuple[float, ...], ...] = field(default=(), repr=False)
    judger_threshold: float = DEFAULT_JUDGER_THRESHOLD


def _check_acceptance_consistency(result: SweepResult) -> None:
    """Acceptance is a monotone function of the judger distances.

    Recomputes each rate from the stored distances and checks that a sweep
    point whose per-victim distances are all <= another's never has the
    lower acceptance rate.
    """
    thr = result.judger_threshold
    for rate, dists in zip(result.acceptance_rates, result.judger_distances):
        arr = np.asarray(dists)
        recomputed = float(np.mean(arr <= thr)) if arr.size else 0.0
        if abs(recomputed - rate) > 1e-12:
            raise AssertionError("acceptance rate inconsistent with judger distances")
    for i in range(len(result.counts)):
        for j in range(len(result.counts)):
            di, dj = np.asarray(result.judger_distances[i]), np.asarray(result.judger_distances[j])
            if di.size and di.size == dj.size and np.all(di <= dj):
                if result.acceptance_rates[i] < result.acceptance_rates[j] - 1e-12:
                    raise AssertionError("acceptance rate decreased despite dominated distances")


def sweep(
    db: EnrollmentDb,
    config: OracleConfig,
    victim_ids: Sequence[str],
    probe_pool: Sequence[Embedding],
    counts: Sequence[int],
    solver: Solver,
    basis: SvdBasis | None = None,
    judger_metric: Metric = DEFAULT_JUDGER_METRIC,
    judger_threshold: float = DEFAULT_JUDGER_THRESHOLD,
) -> SweepResult:
    """Median recovery error and acceptance rate per observation count.

    Each victim is attacked with the first m probes of the pool. Rows keep
    the order of `counts`. When a reduced solver gets fewer observations
    than the basis rank, the basis is truncated to rank m: an attacker with
    m distances picks the best rank she can afford. A solver failure on one
    victim (infeasible or degenerate observations, typically under coarse
    rounding) counts as an infinitely bad recovery rather than aborting the
    sweep.
    """
    if not victim_ids:
        raise ValueError("need at least one victim")
    for c in counts:
        if c < 1:
            raise ArityError(f"observation count {c} must be positive")
        if c > len(probe_pool):
            raise ArityError(f"observation count {c} exceeds probe pool {len(probe_pool)}")
    reduced = solver in (Solver.REDUCED_L2, Solver.REDUCED_COSINE)
    med, rates, all_errors, all_jd = [], [], [], []
    for c in counts:
        count_basis = basis
        if reduced and basis is not None and c < basis.rank:
            count_basis = basis.truncate(c)
        take = c
        if solver == Solver.EXACT_L2 and c == probe_pool[0].dim and len(probe_pool) > c:
            # at m == n both sphere intersections satisfy every equation, so
            # grab one more probe purely as a tie-breaker (split off again
            # inside run_attack)
            take = c + 1
        errs, jds = [], []
        for vid in victim_ids:
            log = collect(db, config, vid, probe_pool[:take])
            truth = db.enrolled(vid)
            try:
                report = run_attack(
                    log,
                    solver,
                    basis=count_basis,
                    truth=truth,
                    judger_metric=judger_metric,
                    judger_threshold=judger_threshold,
                )
                errs.append(report.error_to_truth)
                jds.append(report.diagnostics["judger_distance"])
            except (InfeasibleDistancesError, DegenerateGeometryError):
                errs.append(math.inf)
                jds.append(math.inf)
        med.append(float(np.median(errs)))
        rates.append(float(np.mean([jd <= judger_threshold for jd in jds])))
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


def export_sweep_csv(result: SweepResult, path: str | Path) -> None:
    """Write the `m,median_error,acceptance_rate` curve."""
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("m,median_error,acceptance_rate\n")
        for c, e, r in zip(result.counts, result.median_errors, result.acceptance_rates):
            fh.write(f"{c},{repr(float(e))},{repr(float(r))}\n")


def load_sweep_csv(path: str | Path) -> SweepResult:
    """Parse a curve written by export_sweep_csv."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "m,median_error,acceptance_rate":
        raise MalformedFileError(f"{path}: missing sweep header")
    counts, errs, rates = [], [], []
    for line in lines[1:]:
        if not line.strip():
            continue
        try:
            c, e, r = line.split(",")
            counts.append(int(c))
            errs.append(float(e))
            rates.append(float(r))
        except ValueError as exc:
            raise MalformedFileError(f"{path}: bad row {line!r}") from exc
    return SweepResult(tuple(counts), tuple(errs), tuple(rates))
