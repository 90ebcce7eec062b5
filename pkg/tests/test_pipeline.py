import math

import numpy as np
import pytest

from distleak.embeddings import (
    Embedding,
    Metric,
    PopulationSpec,
    distance,
    normalize,
    synth_population,
)
from distleak.errors import ArityError
from distleak.oracle import (
    DisplayMode,
    EnrollmentDb,
    OracleConfig,
    enroll,
    transcript,
)
from distleak.pipeline import (
    Observation,
    ObservationLog,
    Solver,
    SweepResult,
    _check_acceptance_consistency,
    collect,
    export_sweep_csv,
    load_sweep_csv,
    observations_from_transcript,
    run_attack,
    sweep,
)
from distleak.subspace import fit_basis

# frozen synthetic population: rank-33 structure in 128 dims, tuned so the
# rank-error curve crosses 0.1 at rank 33; split into basis / victims /
# probe pool with nothing shared
POP_SPEC = PopulationSpec(
    count=400, ambient_dim=128, intrinsic_rank=33, noise_scale=0.005, seed=20260816
)


@pytest.fixture(scope="module")
def calibrated():
    pop = synth_population(POP_SPEC)
    basis = fit_basis(pop[:300], 33)
    victims = pop[300:320]
    probes = pop[320:400]
    db = EnrollmentDb(metric=Metric.L2)
    for i, v in enumerate(victims):
        enroll(db, f"v{i}", v)
    config = OracleConfig(
        metric=Metric.L2,
        threshold=1.2,
        display_mode=DisplayMode.RAW_DISTANCE,
        display_decimals=17,
        noise_scale=0.0,
        seed=0,
    )
    return db, config, basis, victims, probes


def _l2_db(rng, dim, n_victims=1):
    db = EnrollmentDb(metric=Metric.L2)
    victims = [Embedding(rng.standard_normal(dim)) for _ in range(n_victims)]
    for i, v in enumerate(victims):
        enroll(db, f"v{i}", v)
    config = OracleConfig(
        metric=Metric.L2,
        threshold=1.2,
        display_mode=DisplayMode.RAW_DISTANCE,
        display_decimals=17,
        noise_scale=0.0,
        seed=0,
    )
    return db, config, victims


def test_collect_zero_probes_empty_log():
    rng = np.random.default_rng(80)
    db, config, _ = _l2_db(rng, 4)
    log = collect(db, config, "v0", [])
    assert log.entries == ()


def test_collect_lossless_at_full_decimals():
    rng = np.random.default_rng(81)
    db, config, victims = _l2_db(rng, 8)
    probes = [Embedding(rng.standard_normal(8)) for _ in range(8)]
    log = collect(db, config, "v0", probes)
    assert len(log.entries) == 8
    for obs, probe in zip(log.entries, probes):
        true_d = distance(probe, victims[0], Metric.L2)
        assert abs(obs.leaked_distance - true_d) < 1e-12


def test_collect_respects_rounding_bound():
    rng = np.random.default_rng(82)
    db = EnrollmentDb()
    victim = normalize(Embedding(rng.standard_normal(8)))
    enroll(db, "v0", victim)
    config = OracleConfig(display_decimals=2)
    probes = [normalize(Embedding(rng.standard_normal(8))) for _ in range(20)]
    log = collect(db, config, "v0", probes)
    for obs, probe in zip(log.entries, probes):
        true_d = distance(probe, victim, Metric.COSINE)
        assert abs(obs.leaked_distance - true_d) <= 0.005 + 1e-15


def test_collect_clamps_negative_inversions():
    db = EnrollmentDb()
    e = Embedding(np.array([1.0, 0.0]))
    enroll(db, "v0", e)
    # coarse rounding of a near-zero distance can land the inverse below 0
    config = OracleConfig(display_decimals=0, noise_scale=0.4, seed=3)
    probes = [e] * 20
    log = collect(db, config, "v0", probes)
    assert all(obs.leaked_distance >= 0.0 for obs in log.entries)


def test_replayed_transcript_equals_live_attack():
    rng = np.random.default_rng(83)
    db, config, _ = _l2_db(rng, 8)
    probes = [Embedding(rng.standard_normal(8)) for _ in range(9)]
    ids = [f"p{i}" for i in range(9)]
    live_log = collect(db, config, "v0", probes, probe_ids=ids)
    replay_log = observations_from_transcript(
        transcript(db), dict(zip(ids, probes)), config
    )
    live = run_attack(live_log, Solver.EXACT_L2)
    replayed = run_attack(replay_log, Solver.EXACT_L2)
    assert np.array_equal(live.recovered.values, replayed.recovered.values)


def test_observations_from_transcript_unknown_probe():
    rng = np.random.default_rng(84)
    db, config, _ = _l2_db(rng, 4)
    probes = [Embedding(rng.standard_normal(4)) for _ in range(2)]
    collect(db, config, "v0", probes, probe_ids=["a", "b"])
    with pytest.raises(KeyError):
        observations_from_transcript(transcript(db), {"a": probes[0]}, config)


def test_run_attack_exact_l2_64():
    rng = np.random.default_rng(85)
    db, config, victims = _l2_db(rng, 64)
    probes = [Embedding(rng.standard_normal(64)) for _ in range(64)]
    log = collect(db, config, "v0", probes)
    report = run_attack(log, Solver.EXACT_L2, truth=victims[0])
    assert report.error_to_truth < 1e-6
    assert report.judger_accepted
    assert report.judger_threshold == 0.63
    assert report.num_observations == 64


def test_run_attack_empty_log_is_arity_error():
    log = ObservationLog((), Metric.L2)
    with pytest.raises(ArityError):
        run_attack(log, Solver.EXACT_L2)


def test_run_attack_cross_domain_is_arity_error():
    log = ObservationLog((), Metric.L2)
    with pytest.raises(ArityError):
        run_attack(log, Solver.CROSS_DOMAIN)


def test_run_attack_auto_splits_disambiguator():
    """dim+1 observations: the last one settles the two-candidate tie."""
    rng = np.random.default_rng(86)
    db, config, victims = _l2_db(rng, 8)
    probes = [Embedding(rng.standard_normal(8)) for _ in range(9)]
    log = collect(db, config, "v0", probes)
    report = run_attack(log, Solver.EXACT_L2, truth=victims[0])
    assert report.num_observations == 8  # one held out
    assert report.error_to_truth < 1e-6
    assert "disambiguation_margin" in report.diagnostics or (
        report.diagnostics["num_candidates"] == 1
    )


def test_run_attack_flags_ambiguity_without_extra():
    rng = np.random.default_rng(87)
    db, config, victims = _l2_db(rng, 8)
    probes = [Embedding(rng.standard_normal(8)) for _ in range(8)]
    log = collect(db, config, "v0", probes)
    report = run_attack(log, Solver.EXACT_L2, truth=victims[0])
    if report.diagnostics["num_candidates"] == 2:
        assert report.diagnostics.get("ambiguous") is True


def test_run_attack_exact_cosine():
    rng = np.random.default_rng(88)
    db = EnrollmentDb()
    victim = normalize(Embedding(rng.standard_normal(16)))
    enroll(db, "v0", victim)
    config = OracleConfig(display_decimals=17)
    probes = [normalize(Embedding(rng.standard_normal(16))) for _ in range(16)]
    log = collect(db, config, "v0", probes)
    report = run_attack(log, Solver.EXACT_COSINE, truth=victim)
    assert report.error_to_truth < 1e-9  # cosine distance to truth
    assert report.judger_accepted


def test_run_attack_reduced_requires_basis():
    log = ObservationLog(
        (Observation("p", Embedding(np.array([1.0, 0.0])), 1.0),), Metric.L2
    )
    with pytest.raises(ValueError):
        run_attack(log, Solver.REDUCED_L2)


def test_run_attack_metric_mismatch():
    rng = np.random.default_rng(89)
    obs = tuple(
        Observation(f"p{i}", Embedding(rng.standard_normal(4)), 0.5) for i in range(4)
    )
    log = ObservationLog(obs, Metric.COSINE)
    with pytest.raises(ArityError):
        run_attack(log, Solver.EXACT_L2)


def test_sweep_exact_full_arity():
    rng = np.random.default_rng(90)
    db, config, _ = _l2_db(rng, 16, n_victims=5)
    probes = [Embedding(rng.standard_normal(16)) for _ in range(17)]
    result = sweep(
        db,
        config,
        [f"v{i}" for i in range(5)],
        probes,
        [16],
        Solver.EXACT_L2,
        judger_metric=Metric.L2,
        judger_threshold=1.2,
    )
    assert result.median_errors[0] < 1e-6
    assert result.acceptance_rates[0] == 1.0


def test_sweep_reduced_strictly_decreasing(calibrated):
    db, config, basis, _, probes = calibrated
    counts = [10, 33, 53, 80]
    result = sweep(
        db,
        config,
        [f"v{i}" for i in range(20)],
        probes,
        counts,
        Solver.REDUCED_L2,
        basis=basis,
        judger_metric=Metric.L2,
        judger_threshold=1.2,
    )
    for i in range(len(counts) - 1):
        assert result.median_errors[i + 1] < result.median_errors[i]
    # dropping the basis rank to the budget is what makes m=10 solvable
    assert math.isfinite(result.median_errors[0])


def test_sweep_calibrated_53_crosses_below_threshold(calibrated):
    db, config, basis, _, probes = calibrated
    result = sweep(
        db,
        config,
        [f"v{i}" for i in range(20)],
        probes,
        [33, 53],
        Solver.REDUCED_L2,
        basis=basis,
        judger_metric=Metric.L2,
        judger_threshold=1.2,
    )
    assert result.median_errors[0] >= 0.1  # 33 observations: not enough
    assert result.median_errors[1] < 0.1  # 53 observations: enough


def test_sweep_rejects_bad_counts(calibrated):
    db, config, basis, _, probes = calibrated
    with pytest.raises(ArityError):
        sweep(db, config, ["v0"], probes, [0], Solver.REDUCED_L2, basis=basis)
    with pytest.raises(ArityError):
        sweep(
            db, config, ["v0"], probes, [len(probes) + 1], Solver.REDUCED_L2, basis=basis
        )


def test_sweep_preserves_count_order(calibrated):
    db, config, basis, _, probes = calibrated
    counts = [53, 33]  # deliberately unsorted
    result = sweep(
        db,
        config,
        ["v0", "v1"],
        probes,
        counts,
        Solver.REDUCED_L2,
        basis=basis,
        judger_metric=Metric.L2,
        judger_threshold=1.2,
    )
    assert result.counts == (53, 33)


def test_sweep_deterministic_csv_bytes(calibrated, tmp_path):
    db, config, basis, _, probes = calibrated
    blobs = []
    for run in range(2):
        result = sweep(
            db,
            config,
            [f"v{i}" for i in range(10)],
            probes,
            [33, 53],
            Solver.REDUCED_L2,
            basis=basis,
            judger_metric=Metric.L2,
            judger_threshold=1.2,
        )
        path = tmp_path / f"run{run}.csv"
        export_sweep_csv(result, path)
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]


def test_acceptance_rate_consistency_checker():
    good = SweepResult(
        counts=(1, 2),
        median_errors=(1.0, 0.5),
        acceptance_rates=(0.0, 1.0),
        errors=((1.0, 1.2), (0.4, 0.5)),
        judger_distances=((1.0, 1.2), (0.4, 0.5)),
        judger_threshold=0.8,
    )
    _check_acceptance_consistency(good)  # should not raise
    bad = SweepResult(
        counts=(1, 2),
        median_errors=(1.0, 0.5),
        acceptance_rates=(1.0, 0.0),  # rates contradict the distances
        errors=((1.0, 1.2), (0.4, 0.5)),
        judger_distances=((1.0, 1.2), (0.4, 0.5)),
        judger_threshold=0.8,
    )
    with pytest.raises(AssertionError):
        _check_acceptance_consistency(bad)


def test_export_csv_header_only_for_empty_sweep(tmp_path):
    result = SweepResult(counts=(), median_errors=(), acceptance_rates=())
    path = tmp_path / "empty.csv"
    export_sweep_csv(result, path)
    assert path.read_text(encoding="utf-8") == "m,median_error,acceptance_rate\n"
    back = load_sweep_csv(path)
    assert back.counts == ()


def test_export_csv_roundtrip_and_order(tmp_path):
    result = SweepResult(
        counts=(53, 10, 33),
        median_errors=(0.04939, 1.447, 0.30741),
        acceptance_rates=(1.0, 0.25, 0.75),
    )
    path = tmp_path / "curve.csv"
    export_sweep_csv(result, path)
    back = load_sweep_csv(path)
    assert back.counts == (53, 10, 33)  # emitted in given order, not sorted
    for a, b in zip(back.median_errors, result.median_errors):
        assert abs(a - b) < 1e-12
    for a, b in zip(back.acceptance_rates, result.acceptance_rates):
        assert abs(a - b) < 1e-12


def test_load_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y,z\n1,2,3\n", encoding="utf-8")
    from distleak.errors import MalformedFileError

    with pytest.raises(MalformedFileError):
        load_sweep_csv(path)
