"""Command-line entry points.

Subcommands:
  run           execute an experiment config into an output directory
  metrics       recompute and print metrics for a finished run directory
  audit         re-check denoiser-call counts against each run's config
  train-scorer  fit the contrastive scorer on a sample corpus
  tournament    drive a preference tournament (scripted or served over HTTP)
  ablate        history-window ablation for one spec
  demo          write and run a small self-contained example

The BEAMLAT_SEED environment variable overrides the master seed for run and
ablate, which keeps scripted comparisons reproducible without editing
configs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .engine import BeamConfig
from .exceptions import BeamlatError
from .harness import (
    MANIFEST_NAME,
    ablation_csv,
    make_tournament_config,
    run_experiment,
    run_history_ablation,
)
from .metrics import complexity_audit, sequence_metrics, win_percentages
from .scoring import ScoreModel, load_corpus, train_classifier
from .server import TournamentServer
from .specs import SequenceSpec, goal_condition, resolve_conditions
from .tournament import Contender, Tournament, run_scripted
from .world import Condition, MixtureComponent, MixtureModel, World


def _env_seed() -> int | None:
    raw = os.environ.get("BEAMLAT_SEED")
    return int(raw) if raw not in (None, "") else None


def _load_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# -- run ------------------------------------------------------------------


def _cmd_run(args) -> int:
    experiment = _load_json(args.experiment)
    out = args.out or experiment.get("output_dir")
    if out is None:
        out = Path("runs") / Path(args.experiment).stem
    seed = args.seed if args.seed is not None else _env_seed()
    manifest = run_experiment(
        experiment, out, base_dir=Path(args.experiment).parent, seed_override=seed
    )
    for job in manifest["jobs"]:
        line = f"{job['job_id']}: {job['status']}"
        if job["status"] == "ok":
            line += f" (cost={job['cost']}, score={job['score']:.4f})"
        else:
            line += f" ({job['error']})"
        print(line)
    print(f"wrote {Path(out) / MANIFEST_NAME}")
    return 0 if all(j["status"] == "ok" for j in manifest["jobs"]) else 1


# -- metrics / audit ------------------------------------------------------


def _iter_ok_jobs(run_dir: Path):
    manifest = _load_json(run_dir / MANIFEST_NAME)
    for job in manifest["jobs"]:
        if job["status"] != "ok":
            continue
        run_log = _load_json(run_dir / job["dir"] / "run_log.json")
        yield job, run_log


def _cmd_metrics(args) -> int:
    run_dir = Path(args.run_dir)
    world = World.load(run_dir / "world.json")
    reports: dict[str, dict] = {}
    for job, run_log in _iter_ok_jobs(run_dir):
        spec = SequenceSpec.from_json(run_log["spec"])
        samples = [np.asarray(s["sample"], dtype=float) for s in run_log["chosen_path"]["steps"]]
        report = sequence_metrics(
            samples, list(resolve_conditions(spec, world)), goal_condition(spec, world)
        )
        reports.setdefault(job["method_id"], {})[spec.spec_id] = report
        for row in report.rows(job["method_id"], spec.spec_id):
            print(",".join(str(v) for v in row))
    methods = {m for m in reports}
    spec_counts = {m: len(by) for m, by in reports.items()}
    if len(methods) >= 2 and len(set(spec_counts.values())) == 1:
        table = win_percentages(reports)
        for method in sorted(table):
            wins = " ".join(f"{k}={v:.1f}%" for k, v in sorted(table[method].items()))
            print(f"wins {method}: {wins}")
    return 0


def _cmd_audit(args) -> int:
    run_dir = Path(args.run_dir)
    failures = 0
    for job, run_log in _iter_ok_jobs(run_dir):
        audit = complexity_audit(run_log)
        status = "ok" if audit["matches"] else "MISMATCH"
        if not audit["matches"]:
            failures += 1
        print(
            f"{job['job_id']}: {status} expected={audit['expected_calls']} "
            f"actual={audit['actual_calls']} total={audit['total_calls']}"
        )
    return 0 if failures == 0 else 1


# -- train-scorer ---------------------------------------------------------


def _cmd_train_scorer(args) -> int:
    corpus = load_corpus(args.corpus)
    world = World.load(args.world)
    model = train_classifier(
        corpus,
        world,
        n_negatives=args.negatives,
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
    )
    model.save(args.out)
    weights = ", ".join(f"{n}={w:.4f}" for n, w in zip(model.feature_spec, model.weights))
    print(f"trained scorer: {weights}, bias={model.bias:.4f}")
    print(f"wrote {args.out}")
    return 0


# -- tournament -----------------------------------------------------------


def _cmd_tournament(args) -> int:
    config = _load_json(args.config)
    journal = Path(args.journal) if args.journal else None
    if journal is not None and journal.exists() and journal.stat().st_size > 0:
        tournament = Tournament.from_journal(journal)
        resolved = sum(1 for p in tournament.pairings if p.resolved)
        print(f"resumed from journal: {resolved} verdicts replayed")
    else:
        contenders = [Contender.from_json(c) for c in config["contenders"]]
        tournament = Tournament(contenders, journal_path=journal)
    assets = config.get("assets", {})

    if args.scripted_judge:
        champion = run_scripted(tournament, lambda pairing: args.scripted_judge)
        print(f"champion: {champion.config_id} (cost={champion.cost})")
        agreement = tournament.agreement()
        kappa = agreement["kappa"]
        print(f"kappa: {'n/a' if kappa is None else f'{kappa:.2f}'}")
        return 0

    if args.serve:
        server = TournamentServer(tournament, assets=assets, ui_dir=args.ui, port=args.port)
        print(f"serving on {server.url}", flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            server.shutdown()
        return 0

    state = tournament.to_json()
    print(json.dumps(state, sort_keys=True, indent=2))
    return 0


# -- ablate ---------------------------------------------------------------


def _cmd_ablate(args) -> int:
    world = World.load(args.world)
    spec = SequenceSpec.load(args.spec)
    raw = _load_json(args.config) if args.config else {}
    seed = args.seed if args.seed is not None else _env_seed()
    if seed is not None:
        raw["master_seed"] = seed
    report = run_history_ablation(world, spec, BeamConfig.from_json(raw))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ablation.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    (out / "ablation.csv").write_text(ablation_csv(report), encoding="utf-8")
    for row in report["rows"]:
        print(
            f"m={row['window']}: total_calls={row['total_calls']} "
            f"score={row['score']:.4f} clip_star={row['clip_star']:.4f}"
        )
    print(f"wrote {out / 'ablation.json'}")
    return 0


# -- demo -----------------------------------------------------------------


def demo_world(d: int = 2, T: int = 60) -> World:
    """Four prompts in the plane, two mixture modes each."""
    rng = np.random.default_rng(7)
    tokens = ["dough", "sauce", "cheese", "baked"]
    angles = np.linspace(0.0, 2 * np.pi, len(tokens), endpoint=False)
    vocabulary = {}
    for token, angle in zip(tokens, angles):
        direction = np.array([np.cos(angle), np.sin(angle)])
        embedding = direction if d == 2 else rng.standard_normal(d)
        centers = [2.2 * direction, 1.2 * direction + np.array([0.4, -0.4])]
        if d != 2:
            centers = [rng.standard_normal(d), rng.standard_normal(d)]
        components = [
            MixtureComponent(weight=0.7, mean=np.asarray(centers[0], dtype=float), var=0.08),
            MixtureComponent(weight=0.3, mean=np.asarray(centers[1], dtype=float), var=0.12),
        ]
        condition = Condition(token=token, embedding=embedding, text=f"add {token}")
        vocabulary[token] = (condition, MixtureModel(tuple(components)))
    return World(d=d, T=T, vocabulary=vocabulary, beta_start=1e-4, beta_end=0.05)


def demo_experiment(world_path: str) -> dict:
    steps = [{"token": t, "text": f"step {i + 1}: add {t}"} for i, t in enumerate(
        ["dough", "sauce", "cheese", "baked"]
    )]
    spec = {"spec_id": "pizza", "goal_text": "a finished pizza", "steps": steps}
    return {
        "world": world_path,
        "master_seed": 11,
        "render_mode": "scatter",
        "specs": [spec],
        "methods": [
            {"method_id": "beam", "kind": "beam", "config": {"width": 3, "r": 3}},
            {"method_id": "greedy", "kind": "greedy", "config": {"r": 3}},
            {"method_id": "nucleus", "kind": "nucleus", "config": {"r": 3}, "p": 0.9},
        ],
    }


def _cmd_demo(args) -> int:
    out = Path(args.dir)
    out.mkdir(parents=True, exist_ok=True)
    world = demo_world()
    world.save(out / "world.json")
    experiment = demo_experiment("world.json")
    (out / "experiment.json").write_text(
        json.dumps(experiment, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    manifest = run_experiment(experiment, out / "run", base_dir=out)
    ok = sum(1 for j in manifest["jobs"] if j["status"] == "ok")
    print(f"demo: {ok}/{len(manifest['jobs'])} jobs ok under {out / 'run'}")
    tournament_config = make_tournament_config(out / "run")
    (out / "tournament.json").write_text(
        json.dumps(tournament_config, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {out / 'tournament.json'}")
    print(f"next: beamlat tournament {out / 'tournament.json'} --serve")
    return 0


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamlat", description="beam search over latent denoising trajectories"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("experiment", help="experiment JSON file")
    p_run.add_argument("--out", help="output directory (default: config output_dir)")
    p_run.add_argument("--seed", type=int, help="override every method's master seed")
    p_run.set_defaults(func=_cmd_run)

    p_metrics = sub.add_parser("metrics", help="recompute metrics for a run directory")
    p_metrics.add_argument("run_dir")
    p_metrics.set_defaults(func=_cmd_metrics)

    p_audit = sub.add_parser("audit", help="re-check call counts for a run directory")
    p_audit.add_argument("run_dir")
    p_audit.set_defaults(func=_cmd_audit)

    p_train = sub.add_parser("train-scorer", help="fit the contrastive scorer")
    p_train.add_argument("corpus", help="corpus JSON file")
    p_train.add_argument("--world", required=True, help="world JSON file")
    p_train.add_argument("--out", default="scorer.json")
    p_train.add_argument("--negatives", type=int, default=3)
    p_train.add_argument("--epochs", type=int, default=300)
    p_train.add_argument("--lr", type=float, default=0.2)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.set_defaults(func=_cmd_train_scorer)

    p_tour = sub.add_parser("tournament", help="run or serve a preference tournament")
    p_tour.add_argument("config", help="tournament JSON config")
    p_tour.add_argument("--journal", help="JSON-lines journal path (resume if present)")
    p_tour.add_argument("--serve", action="store_true", help="serve the annotation API")
    p_tour.add_argument("--port", type=int, default=0, help="port (0 = ephemeral)")
    p_tour.add_argument("--ui", help="static UI directory to serve at /")
    p_tour.add_argument(
        "--scripted-judge",
        choices=["FIRST", "SECOND", "BOTH_GOOD", "BOTH_BAD"],
        help="resolve every pairing with this verdict and print the champion",
    )
    p_tour.set_defaults(func=_cmd_tournament)

    p_ablate = sub.add_parser("ablate", help="history-window ablation")
    p_ablate.add_argument("--world", required=True)
    p_ablate.add_argument("--spec", required=True)
    p_ablate.add_argument("--config", help="base decode config JSON")
    p_ablate.add_argument("--out", default="ablation")
    p_ablate.add_argument("--seed", type=int)
    p_ablate.set_defaults(func=_cmd_ablate)

    p_demo = sub.add_parser("demo", help="write and run a small example")
    p_demo.add_argument("dir")
    p_demo.set_defaults(func=_cmd_demo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BeamlatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
