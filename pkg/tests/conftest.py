import numpy as np
import pytest

from beamlat import (
    Condition,
    MixtureComponent,
    MixtureModel,
    SequenceSpec,
    World,
)


def make_world(
    d: int = 2,
    T: int = 60,
    beta_start: float = 1e-4,
    beta_end: float = 0.05,
    tokens: tuple[str, ...] = ("dough", "sauce", "cheese", "baked"),
) -> World:
    """Small deterministic world: one token per compass direction, two
    mixture modes each."""
    rng = np.random.default_rng(7)
    angles = np.linspace(0.0, 2 * np.pi, len(tokens), endpoint=False)
    vocabulary = {}
    for token, angle in zip(tokens, angles):
        direction = np.array([np.cos(angle), np.sin(angle)])
        if d == 2:
            embedding = direction
            centers = [2.2 * direction, 1.2 * direction + np.array([0.4, -0.4])]
        else:
            embedding = rng.standard_normal(d)
            centers = [rng.standard_normal(d), rng.standard_normal(d)]
        components = (
            MixtureComponent(weight=0.7, mean=np.asarray(centers[0], dtype=float), var=0.08),
            MixtureComponent(weight=0.3, mean=np.asarray(centers[1], dtype=float), var=0.12),
        )
        condition = Condition(token=token, embedding=embedding, text=f"add {token}")
        vocabulary[token] = (condition, MixtureModel(components))
    return World(d=d, T=T, vocabulary=vocabulary, beta_start=beta_start, beta_end=beta_end)


def make_spec(tokens, spec_id: str = "seq", goal_text: str = "done") -> SequenceSpec:
    return SequenceSpec.from_json(
        {
            "spec_id": spec_id,
            "goal_text": goal_text,
            "steps": [{"token": t, "text": f"step: {t}"} for t in tokens],
        }
    )


@pytest.fixture(scope="session")
def world() -> World:
    return make_world()


@pytest.fixture(scope="session")
def spec4() -> SequenceSpec:
    return make_spec(["dough", "sauce", "cheese", "baked"], spec_id="pizza")


@pytest.fixture(scope="session")
def spec3() -> SequenceSpec:
    return make_spec(["dough", "sauce", "cheese"], spec_id="short")


@pytest.fixture(scope="session")
def fidelity_world() -> World:
    """Single-token world whose schedule ends deep in the noise regime, so a
    full reverse pass from pure noise reproduces the mixture closely."""
    components = (
        MixtureComponent(weight=0.6, mean=np.array([2.0, 1.5]), var=0.09),
        MixtureComponent(weight=0.4, mean=np.array([-2.0, -1.0]), var=0.09),
    )
    condition = Condition(token="scene", embedding=np.array([1.0, 0.0]), text="a scene")
    return World(
        d=2,
        T=100,
        vocabulary={"scene": (condition, MixtureModel(components))},
        beta_start=1e-4,
        beta_end=0.12,
    )
