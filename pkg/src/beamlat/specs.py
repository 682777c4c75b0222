"""Sequence specifications and contextualised prompts.

A sequence spec lists the per-step prompts (display text + vocabulary token)
and the goal.  Contextualisation blends each step's embedding with the mean
of its predecessors so later prompts stay anchored to the story so far:

    e'_j = normalize((1 - blend) * e(s_j) + blend * mean(e(s_1..j-1)))

Step 1 is never altered, and blend = 0 returns the conditions untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .validation import check_unit_interval
from .world import Condition, World


@dataclass(frozen=True)
class SequenceStep:
    text: str
    token: str


@dataclass(frozen=True)
class SequenceSpec:
    spec_id: str
    goal_text: str
    steps: tuple[SequenceStep, ...]
    goal_token: str | None = None

    def __post_init__(self):
        if not self.steps:
            raise ValueError("sequence spec needs at least one step")

    def __len__(self) -> int:
        return len(self.steps)

    def to_json(self) -> dict:
        return {
            "spec_id": self.spec_id,
            "goal_text": self.goal_text,
            "goal_token": self.goal_token,
            "steps": [{"text": s.text, "token": s.token} for s in self.steps],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SequenceSpec":
        return cls(
            spec_id=str(data["spec_id"]),
            goal_text=str(data.get("goal_text", "")),
            goal_token=data.get("goal_token"),
            steps=tuple(
                SequenceStep(text=s.get("text", ""), token=s["token"]) for s in data["steps"]
            ),
        )

    @classmethod
    def load(cls, path: str | Path) -> "SequenceSpec":
        return cls.from_json(json.loads(Path(path).read_text()))


def resolve_conditions(spec: SequenceSpec, world: World) -> tuple[Condition, ...]:
    """Per-step conditions with the vocabulary's base embeddings, carrying the
    spec's display texts."""
    conditions = []
    for step in spec.steps:
        base = world.condition(step.token)
        conditions.append(
            Condition(token=base.token, embedding=base.embedding, text=step.text or base.text)
        )
    return tuple(conditions)


def goal_condition(spec: SequenceSpec, world: World) -> Condition:
    """The goal's condition; falls back to the last step's token."""
    token = spec.goal_token or spec.steps[-1].token
    base = world.condition(token)
    return Condition(token=base.token, embedding=base.embedding, text=spec.goal_text or base.text)


def contextualize_prompts(
    conditions: tuple[Condition, ...], blend: float
) -> tuple[Condition, ...]:
    """Blend each condition (step 2 onward) with the mean of its predecessors."""
    blend = check_unit_interval(blend, "blend")
    if blend == 0.0 or len(conditions) < 2:
        return conditions
    out = [conditions[0]]
    base = [c.embedding for c in conditions]
    for j in range(1, len(conditions)):
        prefix_mean = np.mean(base[:j], axis=0)
        mixed = (1.0 - blend) * base[j] + blend * prefix_mean
        norm = np.linalg.norm(mixed)
        if norm > 0.0:
            mixed = mixed / norm
        out.append(
            Condition(token=conditions[j].token, embedding=mixed, text=conditions[j].text)
        )
    return tuple(out)
