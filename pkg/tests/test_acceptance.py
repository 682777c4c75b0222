"""Acceptance suite.  Each test covers one release criterion and prints one
``ACCEPTANCE <name>: PASS/FAIL`` line through the capture so the verdicts are
visible in plain pytest output."""

import json
import os
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from beamlat import (
    BeamConfig,
    decode_sequence,
    exhaustive_oracle,
    fleiss_kappa,
    greedy_decode,
    nucleus_decode,
    sequence_metrics,
)
from beamlat.denoisers import ToyDenoiser, sample_exact_batch
from beamlat.harness import run_history_ablation
from beamlat.metrics import complexity_audit, prompt_alignment, unit
from beamlat.schedule import build_schedule
from beamlat.scoring import ContrastiveScorer, ScoreModel, log_softmax
from beamlat.specs import resolve_conditions
from beamlat.tournament import Contender, Tournament, run_scripted
from beamlat.world import Condition, MixtureComponent, MixtureModel
from tests.conftest import make_spec, make_world

TOKENS = ("dough", "sauce", "cheese", "baked")


@contextmanager
def criterion(name: str, capsys):
    try:
        yield
    except BaseException:
        with capsys.disabled():
            print(f"ACCEPTANCE {name}: FAIL", flush=True)
        raise
    with capsys.disabled():
        print(f"ACCEPTANCE {name}: PASS", flush=True)


def random_spec(rng: np.random.Generator, length: int, spec_id: str):
    return make_spec([TOKENS[int(rng.integers(4))] for _ in range(length)], spec_id=spec_id)


def test_acceptance_oracle_equivalence(capsys, world):
    with criterion("oracle_equivalence", capsys):
        rng = np.random.default_rng(2024)
        started = time.monotonic()
        for i in range(50):
            spec = random_spec(rng, int(rng.integers(2, 4)), f"inst{i}")
            latents = ((0,), (1,), (0, 1))[int(rng.integers(3))]
            config = BeamConfig(
                width=999,
                m=int(rng.integers(1, 3)),
                latent_indices=latents,
                r=int(rng.integers(1, 3)),
                prune_start=4,  # never reached: pruning disabled
                n_random_mid=int(rng.integers(0, 2)),
                master_seed=1000 + i,
            )
            dec = decode_sequence(spec, world, config)
            orc = exhaustive_oracle(spec, world, config)
            assert dec.winner.id_path == orc.id_path
            assert [s.ref for s in dec.winner.steps] == list(orc.refs)
            assert abs(dec.score - orc.score) <= 1e-9
        assert time.monotonic() - started < 60.0


def test_acceptance_complexity_law(capsys, world, spec4):
    with criterion("complexity_law", capsys):
        result = decode_sequence(spec4, world, BeamConfig(master_seed=3))
        # defaults w=4, m=2, |L|=4, n_random=1, prune_start=3 on 4 steps:
        # r, then r*(1*4+1), then full fanout, then pruned-to-w parents
        assert result.denoiser_calls == [4, 20, 180, 36]
        audit = complexity_audit(result.run_log)
        assert audit["matches"]
        assert audit["expected_calls"] == [4, 20, 180, 36]


def test_acceptance_exact_backend_fidelity(capsys, fidelity_world):
    with criterion("exact_backend_fidelity", capsys):
        started = time.monotonic()
        mixture = fidelity_world.mixture("scene")
        schedule = fidelity_world.schedule()
        samples = sample_exact_batch(mixture, schedule, 10_000, seed=7)

        means = mixture.means()
        dist = np.stack([
            np.linalg.norm(samples - means[c], axis=1) for c in range(len(means))
        ])
        labels = dist.argmin(axis=0)
        for c, weight in enumerate(mixture.weights()):
            occupancy = float((labels == c).mean())
            assert abs(occupancy - weight) <= 0.03
            centroid = samples[labels == c].mean(axis=0)
            assert np.all(np.abs(centroid - means[c]) <= 0.05)

        mu = np.array([0.8, -0.3])
        point = MixtureModel((MixtureComponent(weight=1.0, mean=mu, var=1e-10),))
        landed = sample_exact_batch(point, schedule, 500, seed=5)
        assert np.abs(landed - mu).max() <= 1e-6
        assert time.monotonic() - started < 30.0


def test_acceptance_gradient_checks(capsys):
    with criterion("gradient_checks", capsys):
        eps = 1e-6

        def grads_match(a: float, fd: float) -> bool:
            # differences below central-difference roundoff (~1e-10 here)
            # are indistinguishable from zero; otherwise compare relatively
            if abs(a - fd) <= 1e-8:
                return True
            return abs(a - fd) / max(abs(a), abs(fd)) < 1e-4

        den = ToyDenoiser(hidden_units=6, seed=1)
        rng = np.random.default_rng(11)
        d = 2
        inputs = rng.standard_normal((8, 2 * d + 1))
        targets = rng.standard_normal((8, d))
        base = den._init_params(d)
        for _ in range(10):
            flat = base + 0.5 * rng.standard_normal(base.size)
            _, grad = den.loss_and_grad(flat, inputs, targets)
            for i in rng.choice(flat.size, size=5, replace=False):
                plus, minus = flat.copy(), flat.copy()
                plus[i] += eps
                minus[i] -= eps
                fd = (
                    den.loss_and_grad(plus, inputs, targets)[0]
                    - den.loss_and_grad(minus, inputs, targets)[0]
                ) / (2 * eps)
                assert grads_match(grad[i], fd)

        scorer = ContrastiveScorer()
        batches = [rng.standard_normal((int(rng.integers(2, 6)), 4)) for _ in range(6)]
        for _ in range(10):
            weights = rng.standard_normal(4)
            bias = float(rng.standard_normal())
            _, g_w, g_b = scorer.loss_and_grad(weights, bias, batches)
            for i in range(4):
                plus, minus = weights.copy(), weights.copy()
                plus[i] += eps
                minus[i] -= eps
                fd = (
                    scorer.loss_and_grad(plus, bias, batches)[0]
                    - scorer.loss_and_grad(minus, bias, batches)[0]
                ) / (2 * eps)
                assert grads_match(g_w[i], fd)
            fd_b = (
                scorer.loss_and_grad(weights, bias + eps, batches)[0]
                - scorer.loss_and_grad(weights, bias - eps, batches)[0]
            ) / (2 * eps)
            assert grads_match(g_b, fd_b)


def test_acceptance_softmax_invariants(capsys, world, spec3):
    with criterion("softmax_invariants", capsys):
        rng = np.random.default_rng(5)
        for _ in range(200):
            phis = rng.standard_normal(int(rng.integers(1, 9))) * 10
            ls = log_softmax(phis)
            assert abs(float(np.exp(ls).sum()) - 1.0) <= 1e-9
            shift = float(rng.standard_normal()) * 100
            shifted = log_softmax(phis + shift)
            assert np.max(np.abs(shifted - ls)) <= 1e-9
            assert np.array_equal(np.argsort(-shifted), np.argsort(-ls))

        config = BeamConfig(width=3, r=2, latent_indices=(0, 1), master_seed=8)
        result = decode_sequence(spec3, world, config)
        parents: dict[str, float] = {"": 0.0}
        for step_entries in result.run_log["per_step"]:
            sums: dict[str, float] = {}
            for entry in step_entries:
                parent_cum = parents[entry["parent_id"]]
                assert abs(entry["cumulative"] - (parent_cum + entry["log_softmax"])) <= 1e-9
                sums.setdefault(entry["parent_id"], 0.0)
                sums[entry["parent_id"]] += float(np.exp(entry["log_softmax"]))
            for total in sums.values():
                assert abs(total - 1.0) <= 1e-9
            parents = {e["beam_id"]: e["cumulative"] for e in step_entries}
        chosen = result.run_log["chosen_path"]
        assert abs(sum(s["log_softmax"] for s in chosen["steps"]) - chosen["score"]) <= 1e-9


def test_acceptance_baseline_equivalence(capsys, world):
    with criterion("baseline_equivalence", capsys):
        rng = np.random.default_rng(77)
        for i in range(20):
            spec = random_spec(rng, int(rng.integers(2, 5)), f"base{i}")
            latents = ((0,), (1,), (0, 1), (0, 2))[int(rng.integers(4))]
            shared = dict(
                latent_indices=latents,
                n_random_mid=int(rng.integers(0, 2)),
                master_seed=500 + i,
            )
            greedy = greedy_decode(spec, world, BeamConfig(r=1, m=3, width=7, **shared))
            beam = decode_sequence(
                spec,
                world,
                BeamConfig(r=1, m=1, width=1, prune_start=2, **shared),
                model=ScoreModel.prompt_only(),
            )
            assert greedy.winner.id_path == beam.winner.id_path
            assert [s.ref for s in greedy.winner.steps] == [s.ref for s in beam.winner.steps]

            nucleus = nucleus_decode(spec, world, BeamConfig(r=1, **shared), p=1e-6)
            assert nucleus.winner.id_path == greedy.winner.id_path
            assert [s.ref for s in nucleus.winner.steps] == [
                s.ref for s in greedy.winner.steps
            ]


def test_acceptance_metric_clipping(capsys, world, spec4):
    with criterion("metric_clipping", capsys):
        conditions = resolve_conditions(spec4, world)
        frame = np.array([1.0, 0.4])
        report = sequence_metrics([frame.copy() for _ in range(4)], conditions, conditions[-1])
        assert report.clip_i == 0.0  # identical frames: consistency clipped
        assert report.clip_i_raw == pytest.approx(1.0)

        e1 = np.zeros(4)
        e1[0] = 1.0
        below = np.zeros(4)
        below[0] = 0.05
        below[1] = np.sqrt(1 - 0.05**2)
        above = np.zeros(4)
        above[0] = 0.5
        above[1] = np.sqrt(1 - 0.25)
        conds = [Condition(token="t", text="t", embedding=e1)] * 2
        _, clipped = prompt_alignment([below, above], conds, floor=0.1)
        assert clipped == pytest.approx((0.0 + 0.5) / 2, abs=1e-12)

        rng = np.random.default_rng(4)
        noisy = [rng.standard_normal(2) for _ in range(4)]
        report = sequence_metrics(noisy, conditions, conditions[-1])
        assert report.clip_star == report.clip_i * report.clip_t  # exact product

        assert fleiss_kappa(np.array([[2, 0], [0, 2]])) == 1.0
        assert fleiss_kappa(np.array([[1, 1], [1, 1]])) == -1.0


def test_acceptance_run_determinism(capsys, tmp_path, world):
    with criterion("run_determinism", capsys):
        experiment = {
            "world": world.to_json(),
            "master_seed": 1,
            "specs": [make_spec(["dough", "sauce", "cheese"], spec_id="seq").to_json()],
            "methods": [
                {"method_id": "beam", "kind": "beam",
                 "config": {"width": 2, "r": 2, "latent_indices": [0, 1], "prune_start": 2}},
                {"method_id": "greedy", "kind": "greedy", "config": {"r": 2}},
                {"method_id": "nucleus", "kind": "nucleus", "p": 0.9, "config": {"r": 2}},
            ],
        }
        exp_path = tmp_path / "experiment.json"
        exp_path.write_text(json.dumps(experiment))
        env = dict(os.environ, BEAMLAT_SEED="777")

        outputs = []
        for name in ("first", "second"):
            out = tmp_path / name
            proc = subprocess.run(
                [sys.executable, "-m", "beamlat.cli", "run", str(exp_path), "--out", str(out)],
                capture_output=True,
                text=True,
                env=env,
                timeout=300,
            )
            assert proc.returncode == 0, proc.stderr
            tree = {}
            for path in sorted(out.rglob("*")):
                if path.name == "run_log.json" or path.name.endswith("metrics.csv"):
                    tree[str(path.relative_to(out))] = path.read_bytes()
            outputs.append(tree)
        assert outputs[0].keys() == outputs[1].keys()
        assert len(outputs[0]) >= 7  # 3 run logs + 3 job metrics + combined metrics
        for key in outputs[0]:
            assert outputs[0][key] == outputs[1][key], f"{key} differs between runs"


def test_acceptance_tournament_logic(capsys, tmp_path):
    with criterion("tournament_logic", capsys):
        rng = np.random.default_rng(12)
        costs = rng.permutation(np.arange(100, 100 + 24))
        contenders = [
            Contender(config_id=f"cfg{i:02d}", cost=int(costs[i])) for i in range(24)
        ]
        journal = tmp_path / "journal.jsonl"
        tournament = Tournament(contenders, journal_path=journal)
        champion = run_scripted(tournament, judge=lambda pairing: "BOTH_BAD")
        assert champion.cost == int(costs.min())
        assert len(tournament.pairings) == 23
        assert all(p.resolved for p in tournament.pairings)
        assert sum(len(p.ratings) for p in tournament.pairings) == 23

        replayed = Tournament.from_journal(journal)
        assert replayed.to_json() == tournament.to_json()

        # crash mid-run: a truncated journal replays to the partial state
        lines = journal.read_text().splitlines()
        partial = tmp_path / "partial.jsonl"
        partial.write_text("\n".join(lines[:11]) + "\n")  # init + 10 verdicts
        recovered = Tournament.from_journal(partial)
        assert sum(1 for p in recovered.pairings if p.resolved) == 10
        resumed = run_scripted(recovered, judge=lambda pairing: "BOTH_BAD")
        assert resumed.config_id == champion.config_id


def test_acceptance_history_ablation(capsys, world):
    with criterion("history_ablation", capsys):
        spec = make_spec(["dough", "sauce", "cheese", "baked", "cheese"], spec_id="five")
        base = BeamConfig(width=2, r=2, latent_indices=(0, 1), prune_start=2, master_seed=9)
        report = run_history_ablation(world, spec, base, windows=(1, 2, "all"))
        rows = report["rows"]
        assert [r["window"] for r in rows] == ["1", "2", "all"]
        assert rows[2]["m"] == 5
        for row in rows:  # all three configurations completed with scores
            assert np.isfinite(row["score"])
            assert len(row["denoiser_calls"]) == 5
        assert rows[1]["total_calls"] < rows[2]["total_calls"]
