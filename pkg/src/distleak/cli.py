"""Command-line front end.

Subcommands mirror the two sides of the toolkit: `oracle` manages the
system under attack (init, enroll, auth) and `attack` runs recoveries
against it (run, sweep, crossdomain). `synth` and `basis` generate the
auxiliary data the attacks need. All randomness flows from the seeds given
on the command line, so identical invocations produce identical files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .crossdomain import (
    cross_domain_attack,
    make_cross_domain_config,
    sample_latents,
)
from .embeddings import (
    Embedding,
    Metric,
    PopulationSpec,
    load_embeddings,
    save_embeddings,
    synth_population,
)
from .oracle import (
    DisplayMode,
    EnrollmentDb,
    OracleConfig,
    append_transcript,
    authenticate,
    enroll,
    load_oracle,
    save_oracle,
    transcript,
)
from .pipeline import (
    Solver,
    collect,
    export_sweep_csv,
    run_attack,
    sweep,
)
from .subspace import fit_basis, load_basis, save_basis

DISPLAY_CHOICES = {m.value: m for m in DisplayMode}
METRIC_CHOICES = {m.value: m for m in Metric}
SOLVER_CHOICES = {
    s.value: s for s in Solver if s != Solver.CROSS_DOMAIN
}


def _transcript_path(db_path: str) -> Path:
    return Path(db_path).with_suffix(Path(db_path).suffix + ".transcript.jsonl")


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = PopulationSpec(args.count, args.dim, args.rank, args.noise, args.seed)
    pop = synth_population(spec)
    save_embeddings(args.out, pop, metric=METRIC_CHOICES[args.metric])
    print(f"wrote {len(pop)} embeddings (dim={args.dim}) to {args.out}")
    return 0


def _cmd_basis(args: argparse.Namespace) -> int:
    samples = load_embeddings(args.samples)
    basis = fit_basis(samples, args.rank)
    save_basis(basis, args.out)
    print(f"fit rank-{basis.rank} basis from {basis.training_count} samples -> {args.out}")
    return 0


def _cmd_oracle_init(args: argparse.Namespace) -> int:
    config = OracleConfig(
        metric=METRIC_CHOICES[args.metric],
        threshold=args.threshold,
        display_mode=DISPLAY_CHOICES[args.display],
        display_decimals=args.decimals,
        noise_scale=args.noise,
        seed=args.seed,
    )
    db = EnrollmentDb(metric=config.metric)
    save_oracle(db, config, args.db)
    print(f"initialised oracle at {args.db}")
    return 0


def _cmd_oracle_enroll(args: argparse.Namespace) -> int:
    db, config = load_oracle(args.db)
    embs = load_embeddings(args.embedding)
    if len(embs) != 1:
        print(f"error: expected exactly one embedding in {args.embedding}, got {len(embs)}", file=sys.stderr)
        return 2
    enroll(db, args.id, embs[0])
    save_oracle(db, config, args.db)
    print(f"enrolled {args.id!r} (dim={embs[0].dim})")
    return 0


def _cmd_oracle_auth(args: argparse.Namespace) -> int:
    db, config = load_oracle(args.db)
    probes = load_embeddings(args.probe)
    tpath = _transcript_path(args.db)
    offset = len(transcript(db))
    # transcripts accumulate across CLI invocations; renumber from the file
    if tpath.exists():
        offset = sum(1 for line in tpath.read_text(encoding="utf-8").splitlines() if line.strip())
    for i, probe in enumerate(probes):
        resp = authenticate(db, config, args.id, probe, probe_id=f"{Path(args.probe).stem}:{i}")
        entry = transcript(db)[-1]
        entry = type(entry)(offset + i, entry.claimed_id, entry.probe_id, entry.displayed, entry.accepted)
        append_transcript(entry, tpath)
        verdict = "ACCEPT" if resp.accepted else "REJECT"
        print(f"attempt {entry.attempt}: {verdict} displayed={resp.displayed_value}")
    return 0


def _load_probes(args: argparse.Namespace) -> list[Embedding]:
    return load_embeddings(args.probes)


def _cmd_attack_run(args: argparse.Namespace) -> int:
    db, config = load_oracle(args.oracle)
    probes = _load_probes(args)
    solver = SOLVER_CHOICES[args.solver]
    basis = load_basis(args.basis) if args.basis else None
    log = collect(db, config, args.victim, probes)
    report = run_attack(log, solver, basis=basis)
    recovered = [float(v) for v in report.recovered.values]
    payload = {
        "solver": report.solver.value,
        "num_observations": report.num_observations,
        "recovered": recovered,
        "diagnostics": {
            k: v for k, v in report.diagnostics.items() if not isinstance(v, np.ndarray)
        },
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"wrote attack report to {args.out}")
    else:
        print(text)
    return 0


def _cmd_attack_sweep(args: argparse.Namespace) -> int:
    db, config = load_oracle(args.oracle)
    probes = _load_probes(args)
    victims = args.victims.split(",")
    counts = [int(c) for c in args.counts.split(",")]
    solver = SOLVER_CHOICES[args.solver]
    basis = load_basis(args.basis) if args.basis else None
    result = sweep(db, config, victims, probes, counts, solver, basis=basis)
    export_sweep_csv(result, args.out)
    print(f"wrote sweep curve ({len(counts)} rows) to {args.out}")
    return 0


def _cmd_attack_crossdomain(args: argparse.Namespace) -> int:
    cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    config = make_cross_domain_config(
        int(cfg["latent_dim"]),
        int(cfg["domain_dim"]),
        seed,
        relation=str(cfg.get("relation", "related")),
    )
    counts = [int(c) for c in cfg["counts"]]
    n_victims = int(cfg.get("victims", 10))
    n_probes = int(cfg.get("probes", max(counts)))
    n_aux = int(cfg.get("aux", 200))
    latent_dim = config.latent_dim
    victims = sample_latents(n_victims, latent_dim, seed + 1)
    probes = sample_latents(n_probes, latent_dim, seed + 2)
    aux = sample_latents(n_aux, latent_dim, seed + 3)
    threshold = float(cfg.get("judger_threshold", 1.2))
    result = cross_domain_attack(config, victims, probes, aux, counts, judger_threshold=threshold)
    export_sweep_csv(result, args.out)
    print(f"wrote cross-domain curve ({len(counts)} rows) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distleak", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic embedding population")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.005)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", choices=sorted(METRIC_CHOICES), default="l2")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("basis", help="fit an SVD basis to an embedding file")
    p.add_argument("--samples", required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_basis)

    oracle = sub.add_parser("oracle", help="manage the system under attack")
    osub = oracle.add_subparsers(dest="oracle_command", required=True)

    p = osub.add_parser("init", help="create an oracle database")
    p.add_argument("--db", required=True)
    p.add_argument("--metric", choices=sorted(METRIC_CHOICES), default="cosine")
    p.add_argument("--threshold", type=float, default=0.63)
    p.add_argument("--display", choices=sorted(DISPLAY_CHOICES), default="one-minus")
    p.add_argument("--decimals", type=int, default=4)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_oracle_init)

    p = osub.add_parser("enroll", help="enroll one identity from an embedding file")
    p.add_argument("--db", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--embedding", required=True)
    p.set_defaults(func=_cmd_oracle_enroll)

    p = osub.add_parser("auth", help="authenticate probes against an identity")
    p.add_argument("--db", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--probe", required=True)
    p.set_defaults(func=_cmd_oracle_auth)

    attack = sub.add_parser("attack", help="run recovery attacks")
    asub = attack.add_subparsers(dest="attack_command", required=True)

    p = asub.add_parser("run", help="recover one victim embedding")
    p.add_argument("--oracle", required=True)
    p.add_argument("--victim", required=True)
    p.add_argument("--probes", required=True)
    p.add_argument("--solver", choices=sorted(SOLVER_CHOICES), required=True)
    p.add_argument("--basis")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_attack_run)

    p = asub.add_parser("sweep", help="error curve over observation budgets")
    p.add_argument("--oracle", required=True)
    p.add_argument("--victims", required=True, help="comma-separated enrolled ids")
    p.add_argument("--probes", required=True)
    p.add_argument("--counts", required=True, help="comma-separated budgets, e.g. 10,33,53,80")
    p.add_argument("--solver", choices=sorted(SOLVER_CHOICES), required=True)
    p.add_argument("--basis")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_attack_sweep)

    p = asub.add_parser("crossdomain", help="borrowed-distance attack across domains")
    p.add_argument("--config", required=True, help="JSON experiment description")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_attack_crossdomain)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
