"""Contrastive step scoring.

A candidate image for step j is scored by a linear model over four cosine
features against the step's condition and the beam context:

    f1  alignment with the step prompt embedding
    f2  mean cosine against the context samples (prior steps)
    f3  cosine against the immediately previous sample
    f4  max cosine against the context samples

phi = w . f + b.  Within one expansion the phis are normalised with a
log-softmax (max-subtracted), and a beam's sequence score is the sum of its
per-step log-softmax terms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import InsufficientCorpusError, TrainingDivergedError
from .seeds import derive_seed
from .validation import as_vector
from .world import Condition, World

FEATURE_SPEC = ("prompt_alignment", "context_mean", "previous_step", "context_max")

Context = list[tuple[np.ndarray, Condition]]


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; zero vectors yield 0 rather than NaN."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def featurize(sample: np.ndarray, condition: Condition, context: Context) -> np.ndarray:
    """Length-4 feature vector; context-dependent entries are 0 with no context."""
    sample = as_vector(sample, "sample")
    f1 = cosine(sample, condition.embedding)
    if not context:
        return np.array([f1, 0.0, 0.0, 0.0])
    sims = [cosine(sample, prior) for prior, _ in context]
    return np.array([f1, float(np.mean(sims)), sims[-1], float(np.max(sims))])


@dataclass(frozen=True)
class ScoreModel:
    weights: np.ndarray = field(repr=False)
    bias: float = 0.0
    feature_spec: tuple[str, ...] = FEATURE_SPEC

    def __post_init__(self):
        object.__setattr__(
            self, "weights", as_vector(self.weights, "weights", d=len(self.feature_spec))
        )

    @classmethod
    def default(cls) -> "ScoreModel":
        """Untrained fallback: prompt alignment first, mild context pull."""
        return cls(weights=np.array([1.0, 0.5, 0.25, 0.25]), bias=0.0)

    @classmethod
    def prompt_only(cls) -> "ScoreModel":
        """Pure prompt-similarity scorer (the greedy decision rule)."""
        return cls(weights=np.array([1.0, 0.0, 0.0, 0.0]), bias=0.0)

    def to_json(self) -> dict:
        return {
            "feature_spec": list(self.feature_spec),
            "weights": self.weights.tolist(),
            "bias": self.bias,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ScoreModel":
        return cls(
            weights=data["weights"],
            bias=float(data["bias"]),
            feature_spec=tuple(data["feature_spec"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ScoreModel":
        return cls.from_json(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")


def score_phi(
    sample: np.ndarray, condition: Condition, context: Context, model: ScoreModel
) -> float:
    return float(model.weights @ featurize(sample, condition, context) + model.bias)


@dataclass(frozen=True)
class ScoreTable:
    step_index: int
    phis: np.ndarray = field(repr=False)
    log_softmax: np.ndarray = field(repr=False)


def log_softmax(phis: np.ndarray) -> np.ndarray:
    phis = np.asarray(phis, dtype=np.float64)
    shifted = phis - phis.max()
    return shifted - np.log(np.exp(shifted).sum())


def log_softmax_step(phis, step_index: int = 0) -> ScoreTable:
    """Stabilised log-softmax over one candidate set."""
    phis = as_vector(phis, "phis")
    if phis.size == 0:
        raise ValueError("cannot normalise an empty candidate set")
    return ScoreTable(step_index=step_index, phis=phis, log_softmax=log_softmax(phis))


# -- training corpus -------------------------------------------------------

# A corpus is a list of sequences; each sequence a list of (token, sample).
Corpus = list[list[tuple[str, np.ndarray]]]


def load_corpus(path: str | Path) -> Corpus:
    data = json.loads(Path(path).read_text())
    return [
        [(step["token"], np.asarray(step["sample"], dtype=np.float64)) for step in seq]
        for seq in data
    ]


def dump_corpus(corpus: Corpus, path: str | Path) -> None:
    data = [
        [{"token": token, "sample": np.asarray(sample).tolist()} for token, sample in seq]
        for seq in corpus
    ]
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def make_negatives(
    corpus: Corpus, t: int, l: int, count: int, seed: int
) -> list[tuple[int, np.ndarray]]:
    """Draw `count` negative samples for step l of sequence t: one sample each
    from `count` distinct other sequences, taken at step l or the nearest
    recorded step (ties towards the earlier step).  Returns (donor id, sample)."""
    if not 0 <= t < len(corpus):
        raise ValueError(f"sequence index {t} out of range")
    if count == 0:
        return []
    donors = [i for i in range(len(corpus)) if i != t and corpus[i]]
    if count > len(donors):
        raise InsufficientCorpusError(
            f"need {count} donor sequences, corpus offers {len(donors)}"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(donors), size=count, replace=False)
    out = []
    for idx in chosen:
        donor = donors[int(idx)]
        steps = corpus[donor]
        nearest = min(range(len(steps)), key=lambda i: (abs(i - l), i))
        out.append((donor, steps[nearest][1]))
    return out


# -- classifier training ----------------------------------------------------


def _corpus_batches(corpus: Corpus, world: World, n_negatives: int, seed: int):
    """Precompute (features matrix, positive row) batches for every (t, l)."""
    batches = []
    for t, seq in enumerate(corpus):
        for l in range(len(seq)):
            token, sample = seq[l]
            condition = world.condition(token)
            context: Context = [
                (prior_sample, world.condition(prior_token))
                for prior_token, prior_sample in seq[:l]
            ]
            rows = [featurize(sample, condition, context)]
            negatives = make_negatives(
                corpus, t, l, n_negatives, derive_seed(seed, "neg", t, l)
            )
            for _, neg_sample in negatives:
                rows.append(featurize(neg_sample, condition, context))
            batches.append(np.stack(rows))  # positive is row 0
    return batches


def _ce_loss_and_grad(
    weights: np.ndarray, bias: float, batches: list[np.ndarray]
) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy of the positive under per-step log-softmax."""
    total = 0.0
    g_w = np.zeros_like(weights)
    g_b = 0.0
    for feats in batches:
        phis = feats @ weights + bias
        ls = log_softmax(phis)
        total -= ls[0]
        probs = np.exp(ls)
        resid = probs.copy()
        resid[0] -= 1.0
        g_w += resid @ feats
        g_b += resid.sum()  # identically 0: softmax is shift invariant
    n = len(batches)
    return total / n, g_w / n, g_b / n


class ContrastiveScorer:
    """Trains the linear step scorer by cross-entropy against sampled
    negatives.  The objective is convex in (w, b); plain gradient descent
    from zeros converges and is deterministic given ``seed`` (which drives
    only the negative sampling)."""

    def __init__(
        self,
        n_negatives: int = 3,
        epochs: int = 300,
        learning_rate: float = 0.2,
        seed: int = 0,
    ):
        self.n_negatives = n_negatives
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed

    def get_params(self, deep: bool = True) -> dict:
        return {
            "n_negatives": self.n_negatives,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
        }

    def set_params(self, **params) -> "ContrastiveScorer":
        for key, value in params.items():
            if key not in self.get_params():
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def loss_and_grad(
        self, weights: np.ndarray, bias: float, batches: list[np.ndarray]
    ) -> tuple[float, np.ndarray, float]:
        return _ce_loss_and_grad(np.asarray(weights, dtype=np.float64), float(bias), batches)

    def fit(self, corpus: Corpus, world: World) -> "ContrastiveScorer":
        if len(corpus) < 2:
            raise InsufficientCorpusError("training needs at least 2 sequences")
        batches = _corpus_batches(corpus, world, self.n_negatives, self.seed)
        weights = np.zeros(len(FEATURE_SPEC))
        bias = 0.0
        history: list[float] = []
        for _ in range(self.epochs):
            loss, g_w, g_b = _ce_loss_and_grad(weights, bias, batches)
            history.append(loss)
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"epoch loss became {loss}")
            weights = weights - self.learning_rate * g_w
            bias = bias - self.learning_rate * g_b
        self.model_ = ScoreModel(weights=weights, bias=bias)
        self.loss_history_ = history
        self.batches_ = batches
        return self


def train_classifier(corpus: Corpus, world: World, **params) -> ScoreModel:
    scorer = ContrastiveScorer(**params).fit(corpus, world)
    return scorer.model_
