"""Toy generation world: a vocabulary of prompt tokens, each carrying an
embedding and a diagonal Gaussian mixture over the latent space.

The world file is JSON:

    {
      "d": 2, "T": 100,
      "beta_start": 1e-4, "beta_end": 0.02,      # optional
      "vocabulary": [
        {"token": "sun", "text": "a drawing of the sun",
         "embedding": [...d floats...],
         "mixture": [{"weight": 0.6, "mean": [...], "var": [...]}, ...]},
        ...
      ]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DimensionError
from .schedule import DEFAULT_BETA_END, DEFAULT_BETA_START, NoiseSchedule, build_schedule
from .validation import as_vector

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class Condition:
    """A prompt token with its embedding and display text."""

    token: str
    embedding: np.ndarray = field(repr=False)
    text: str = ""

    def __post_init__(self):
        object.__setattr__(self, "embedding", as_vector(self.embedding, "embedding"))


@dataclass(frozen=True)
class MixtureComponent:
    weight: float
    mean: np.ndarray = field(repr=False)
    var: np.ndarray = field(repr=False)

    def __post_init__(self):
        mean = as_vector(self.mean, "mean")
        raw_var = np.asarray(self.var, dtype=float)
        if raw_var.ndim == 0:
            # scalar variance means isotropic
            raw_var = np.full(mean.shape[0], float(raw_var))
        var = as_vector(raw_var, "var", d=mean.shape[0])
        if self.weight < 0.0:
            raise ValueError(f"component weight must be >= 0, got {self.weight}")
        if np.any(var <= 0.0):
            raise ValueError("component variances must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)


@dataclass(frozen=True)
class MixtureModel:
    components: tuple[MixtureComponent, ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("mixture needs at least one component")
        total = sum(c.weight for c in self.components)
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"mixture weights sum to {total!r}, expected 1 within {_WEIGHT_TOL}")
        dims = {c.mean.shape[0] for c in self.components}
        if len(dims) != 1:
            raise DimensionError(f"mixture components disagree on dimension: {sorted(dims)}")

    @property
    def d(self) -> int:
        return self.components[0].mean.shape[0]

    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    def means(self) -> np.ndarray:
        return np.stack([c.mean for c in self.components])

    def variances(self) -> np.ndarray:
        return np.stack([c.var for c in self.components])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Direct ancestral sampling; the reference distribution for tests."""
        comp = rng.choice(len(self.components), size=n, p=self.weights())
        eps = rng.standard_normal((n, self.d))
        return self.means()[comp] + np.sqrt(self.variances()[comp]) * eps


@dataclass
class World:
    d: int
    T: int
    vocabulary: dict[str, tuple[Condition, MixtureModel]]
    beta_start: float = DEFAULT_BETA_START
    beta_end: float = DEFAULT_BETA_END

    def __post_init__(self):
        for token, (cond, mixture) in self.vocabulary.items():
            if cond.embedding.shape[0] != self.d:
                raise DimensionError(f"embedding for {token!r} has wrong dimension")
            if mixture.d != self.d:
                raise DimensionError(f"mixture for {token!r} has wrong dimension")
        self._schedule: NoiseSchedule | None = None

    @property
    def tokens(self) -> list[str]:
        return list(self.vocabulary)

    def condition(self, token: str) -> Condition:
        try:
            return self.vocabulary[token][0]
        except KeyError:
            raise KeyError(f"token {token!r} not in world vocabulary") from None

    def mixture(self, token: str) -> MixtureModel:
        try:
            return self.vocabulary[token][1]
        except KeyError:
            raise KeyError(f"token {token!r} not in world vocabulary") from None

    def schedule(self) -> NoiseSchedule:
        if self._schedule is None:
            self._schedule = build_schedule(self.T, self.beta_start, self.beta_end)
        return self._schedule

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "T": self.T,
            "beta_start": self.beta_start,
            "beta_end": self.beta_end,
            "vocabulary": [
                {
                    "token": token,
                    "text": cond.text,
                    "embedding": cond.embedding.tolist(),
                    "mixture": [
                        {"weight": c.weight, "mean": c.mean.tolist(), "var": c.var.tolist()}
                        for c in mixture.components
                    ],
                }
                for token, (cond, mixture) in self.vocabulary.items()
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "World":
        vocab: dict[str, tuple[Condition, MixtureModel]] = {}
        for entry in data["vocabulary"]:
            token = entry["token"]
            cond = Condition(
                token=token, embedding=entry["embedding"], text=entry.get("text", "")
            )
            mixture = MixtureModel(
                components=tuple(
                    MixtureComponent(weight=c["weight"], mean=c["mean"], var=c["var"])
                    for c in entry["mixture"]
                )
            )
            vocab[token] = (cond, mixture)
        return cls(
            d=int(data["d"]),
            T=int(data["T"]),
            vocabulary=vocab,
            beta_start=float(data.get("beta_start", DEFAULT_BETA_START)),
            beta_end=float(data.get("beta_end", DEFAULT_BETA_END)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "World":
        return cls.from_json(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")
