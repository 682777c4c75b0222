"""Experiment harness: run decode jobs from a config file and lay the results
out on disk.

An experiment holds one world, a list of sequence specs, and a list of
methods (beam, greedy, nucleus).  Every (spec, method) pair becomes a job
directory named <spec_id>__<method_id>/ containing run_log.json, metrics.csv,
provenance.csv, audit.json and the rendered SVGs.  The experiment root gets a
manifest plus combined metrics and win-rate tables.  Output is byte-stable:
no timestamps, sorted JSON keys, fixed CSV field order, so identical inputs
reproduce identical trees.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import replace
from pathlib import Path

from .baselines import greedy_decode, nucleus_decode
from .denoisers import ExactMixtureDenoiser
from .engine import BeamConfig, DecodeResult, decode_sequence
from .latent_store import LatentRef, provenance_csv, provenance_stats
from .metrics import MetricsReport, complexity_audit, sequence_metrics, win_percentages
from .render import render_sequence, render_tile, resolve_mode
from .scoring import ScoreModel
from .specs import SequenceSpec, goal_condition, resolve_conditions
from .world import World

MANIFEST_NAME = "manifest.json"


def _dump_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _dump_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _load_world(spec: dict | str, base_dir: Path) -> World:
    if isinstance(spec, str):
        return World.load(base_dir / spec)
    return World.from_json(spec)


def _load_model(spec: dict | str | None, base_dir: Path) -> ScoreModel:
    if spec is None:
        return ScoreModel.default()
    if isinstance(spec, str):
        return ScoreModel.load(base_dir / spec)
    return ScoreModel.from_json(spec)


def _method_config(method: dict, experiment: dict, seed_override: int | None) -> BeamConfig:
    raw = dict(method.get("config", {}))
    raw.setdefault("master_seed", experiment.get("master_seed", 0))
    raw.setdefault("blend", experiment.get("blend", 0.0))
    if seed_override is not None:
        raw["master_seed"] = seed_override
    return BeamConfig.from_json(raw)


def run_job(
    spec: SequenceSpec,
    method: dict,
    world: World,
    model: ScoreModel,
    config: BeamConfig,
) -> DecodeResult:
    kind = method.get("kind", "beam")
    denoiser = ExactMixtureDenoiser(world)
    if kind == "beam":
        return decode_sequence(spec, world, config, denoiser, model)
    if kind == "greedy":
        return greedy_decode(spec, world, config, denoiser)
    if kind == "nucleus":
        return nucleus_decode(spec, world, config, p=float(method.get("p", 0.9)), denoiser=denoiser)
    raise ValueError(f"unknown method kind {kind!r}")


def _write_job_dir(
    job_dir: Path,
    result: DecodeResult,
    spec: SequenceSpec,
    world: World,
    config: BeamConfig,
    render_mode: str,
) -> MetricsReport:
    job_dir.mkdir(parents=True, exist_ok=True)
    _dump_json(job_dir / "run_log.json", result.run_log)
    _dump_json(job_dir / "audit.json", complexity_audit(result.run_log))

    conditions = list(resolve_conditions(spec, world))
    goal = goal_condition(spec, world)
    samples = result.samples
    report = sequence_metrics(samples, conditions, goal)
    method = result.run_log["method"]
    _dump_csv(
        job_dir / "metrics.csv",
        ["method", "sequence_id", "metric", "raw", "clipped"],
        report.rows(method, spec.spec_id),
    )

    refs = [LatentRef.from_json(s["latent_ref"]) for s in result.run_log["chosen_path"]["steps"]]
    rows = provenance_stats(
        [refs], config.m, config.latent_indices, config.n_random_mid
    )
    (job_dir / "provenance.csv").write_text(provenance_csv(rows), encoding="utf-8")

    mixtures = [world.mixture(c.token) for c in conditions]
    mode = resolve_mode(render_mode, world.d)
    (job_dir / "sequence.svg").write_text(
        render_sequence(samples, conditions, mixtures, mode), encoding="utf-8"
    )
    for i, sample in enumerate(samples):
        (job_dir / f"step_{i + 1:02d}.svg").write_text(
            render_tile(sample, mixtures[i], mode), encoding="utf-8"
        )
    return report


def run_experiment(
    experiment: dict,
    out_dir: str | Path,
    *,
    base_dir: str | Path = ".",
    seed_override: int | None = None,
) -> dict:
    """Run every (spec, method) job, tolerating per-job failures.  Returns the
    manifest that was also written to <out_dir>/manifest.json."""
    out_dir = Path(out_dir)
    base_dir = Path(base_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    world = _load_world(experiment["world"], base_dir)
    model = _load_model(experiment.get("scorer"), base_dir)
    render_mode = experiment.get("render_mode", "auto")
    specs = [SequenceSpec.from_json(s) for s in experiment["specs"]]
    methods = experiment["methods"]
    # the run dir is self-contained: metrics/audit re-reads need the world
    _dump_json(out_dir / "world.json", world.to_json())

    jobs = []
    reports: dict[str, dict[str, MetricsReport]] = {}
    for spec in specs:
        for method in methods:
            method_id = method["method_id"]
            job_id = f"{spec.spec_id}__{method_id}"
            job_dir = out_dir / job_id
            config = _method_config(method, experiment, seed_override)
            entry = {
                "job_id": job_id,
                "spec_id": spec.spec_id,
                "method_id": method_id,
                "kind": method.get("kind", "beam"),
                "dir": job_id,
            }
            try:
                result = run_job(spec, method, world, model, config)
                report = _write_job_dir(job_dir, result, spec, world, config, render_mode)
                entry["status"] = "ok"
                entry["cost"] = sum(result.denoiser_calls)
                entry["score"] = result.score
                entry["files"] = sorted(p.name for p in job_dir.iterdir())
                reports.setdefault(method_id, {})[spec.spec_id] = report
            except Exception as exc:  # jobs must not sink the whole run
                entry["status"] = "error"
                entry["error"] = f"{type(exc).__name__}: {exc}"
            jobs.append(entry)

    all_rows = []
    for method_id in sorted(reports):
        for spec_id in sorted(reports[method_id]):
            all_rows.extend(reports[method_id][spec_id].rows(method_id, spec_id))
    _dump_csv(
        out_dir / "metrics.csv", ["method", "sequence_id", "metric", "raw", "clipped"], all_rows
    )

    complete = {
        m: by_spec
        for m, by_spec in reports.items()
        if len(by_spec) == len(specs)
    }
    win_rows = []
    if len(complete) >= 2:
        table = win_percentages(complete)
        for method_id in sorted(table):
            for metric in sorted(table[method_id]):
                win_rows.append((method_id, metric, table[method_id][metric]))
    _dump_csv(out_dir / "wins.csv", ["method", "metric", "win_pct"], win_rows)

    manifest = {
        "world": {"d": world.d, "T": world.T},
        "seed_override": seed_override,
        "jobs": jobs,
    }
    _dump_json(out_dir / MANIFEST_NAME, manifest)
    return manifest


def run_history_ablation(
    world: World,
    spec: SequenceSpec,
    base_config: BeamConfig,
    windows: tuple = (1, 2, "all"),
    model: ScoreModel | None = None,
) -> dict:
    """Vary the donor-history window m and report cost and score.  "all"
    widens the window to the full sequence length."""
    if len(spec) < 3:
        raise ValueError("history ablation needs a spec with at least 3 steps")
    rows = []
    for window in windows:
        m = len(spec) if window == "all" else int(window)
        config = replace(base_config, m=m)
        result = decode_sequence(spec, world, config, None, model)
        conditions = list(resolve_conditions(spec, world))
        report = sequence_metrics(result.samples, conditions, goal_condition(spec, world))
        rows.append(
            {
                "window": str(window),
                "m": m,
                "denoiser_calls": result.denoiser_calls,
                "total_calls": sum(result.denoiser_calls),
                "score": result.score,
                "clip_star": report.clip_star,
                "goal_faithfulness": report.goal_faithfulness,
            }
        )
    return {"spec_id": spec.spec_id, "length": len(spec), "rows": rows}


def ablation_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["window", "m", "total_calls", "score", "clip_star", "goal_faithfulness"])
    for row in report["rows"]:
        writer.writerow(
            [
                row["window"],
                row["m"],
                row["total_calls"],
                row["score"],
                row["clip_star"],
                row["goal_faithfulness"],
            ]
        )
    return buf.getvalue()


def make_tournament_config(run_dir: str | Path) -> dict:
    """Build a tournament config from a finished experiment directory: one
    contender per successful job.  Each contender lists its per-step SVGs as
    assets, one per step text, so the annotation UI shows a tile per step."""
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / MANIFEST_NAME).read_text(encoding="utf-8"))
    contenders = []
    assets: dict[str, str] = {}
    for job in manifest["jobs"]:
        if job["status"] != "ok":
            continue
        run_log = json.loads((run_dir / job["dir"] / "run_log.json").read_text(encoding="utf-8"))
        steps = [s.get("text") or s["token"] for s in run_log["spec"]["steps"]]
        names = []
        for i in range(len(steps)):
            name = f"{job['job_id']}__step_{i + 1:02d}.svg"
            assets[name] = str(run_dir / job["dir"] / f"step_{i + 1:02d}.svg")
            names.append(name)
        contenders.append(
            {
                "config_id": job["job_id"],
                "cost": job["cost"],
                "label": f"{job['method_id']} on {job['spec_id']}",
                "assets": names,
                "step_texts": steps,
            }
        )
    return {"contenders": contenders, "assets": assets}
