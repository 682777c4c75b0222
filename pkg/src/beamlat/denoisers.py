"""Denoiser backends: the exact mixture-posterior backend and a small
trainable noise-prediction MLP.

For a diagonal-Gaussian mixture prior and the forward kernel
q(x_t | x0) = N(sqrt(ab) x0, (1 - ab) I), the posterior mean of x0 given x_t
is available in closed form: component c contributes responsibility

    r_c  propto  w_c N(x_t; sqrt(ab) mu_c, ab s_c + (1 - ab))

and the conjugate per-component mean

    m_c = (mu_c (1 - ab) + sqrt(ab) s_c x_t) / ((1 - ab) + ab s_c),

so E[x0 | x_t] = sum_c r_c m_c.  Responsibilities are computed in log space
with max subtraction.
"""

from __future__ import annotations

import numpy as np

from .diffusion import LatentState
from .exceptions import NumericalUnderflowError, TrainingDivergedError
from .schedule import NoiseSchedule
from .validation import as_vector
from .world import Condition, MixtureModel, World


def mixture_posterior_mean(x: np.ndarray, alpha_bar: float, mixture: MixtureModel) -> np.ndarray:
    """E[x0 | x_t = x] under the mixture prior; batched over leading axes."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.shape[-1] != mixture.d:
        raise ValueError(f"latent dimension {x.shape[-1]} != mixture dimension {mixture.d}")
    if not 0.0 < alpha_bar <= 1.0:
        raise ValueError(f"alpha_bar must lie in (0, 1], got {alpha_bar}")
    if alpha_bar == 1.0:
        # x_t carries no noise: the posterior collapses onto the observation.
        return x[0].copy() if squeeze else x.copy()

    w = mixture.weights()        # (C,)
    mu = mixture.means()         # (C, d)
    var = mixture.variances()    # (C, d)
    marg_var = alpha_bar * var + (1.0 - alpha_bar)               # (C, d)
    diff = x[:, None, :] - np.sqrt(alpha_bar) * mu[None, :, :]   # (n, C, d)
    log_resp = -0.5 * np.sum(np.log(2.0 * np.pi * marg_var)[None] + diff**2 / marg_var[None], axis=2)
    with np.errstate(divide="ignore"):
        log_resp = log_resp + np.log(w)[None]
    log_resp = log_resp - log_resp.max(axis=1, keepdims=True)
    resp = np.exp(log_resp)
    totals = resp.sum(axis=1, keepdims=True)
    if not np.all(np.isfinite(totals)) or np.any(totals <= 0.0):
        raise NumericalUnderflowError("mixture responsibilities vanished")
    resp = resp / totals
    comp_mean = (mu[None] * (1.0 - alpha_bar) + np.sqrt(alpha_bar) * var[None] * x[:, None, :]) / marg_var[None]
    out = np.einsum("nc,ncd->nd", resp, comp_mean)
    return out[0] if squeeze else out


def exact_posterior_mean(xt: LatentState, mixture: MixtureModel) -> np.ndarray:
    return mixture_posterior_mean(xt.vector, xt.noise_level, mixture)


class ExactMixtureDenoiser:
    """Oracle backend: closed-form posterior mean under the world's mixtures."""

    def __init__(self, world: World):
        self.world = world

    def predict_x0(self, vector: np.ndarray, alpha_bar: float, condition: Condition) -> np.ndarray:
        return mixture_posterior_mean(vector, alpha_bar, self.world.mixture(condition.token))


def sample_exact_batch(
    mixture: MixtureModel, schedule: NoiseSchedule, n: int, seed: int
) -> np.ndarray:
    """Vectorised deterministic reverse pass for n seeded noise draws.

    Same per-step algebra as run_denoise with the exact backend; used where
    per-run Python loops would dominate (distribution-fidelity checks).
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, mixture.d))
    ab = schedule.alpha_bar
    for k in range(schedule.T, 0, -1):
        x0_hat = mixture_posterior_mean(x, float(ab[k]), mixture)
        eps_hat = (x - np.sqrt(ab[k]) * x0_hat) / np.sqrt(1.0 - ab[k])
        x = np.sqrt(ab[k - 1]) * x0_hat + np.sqrt(1.0 - ab[k - 1]) * eps_hat
    return x


class ToyDenoiser:
    """Two-layer tanh perceptron predicting the corruption noise.

    Inputs are the concatenation (z_t, alpha_bar_t, condition embedding);
    the output is an estimate of eps.  Trained with minibatch Adam on a
    corruption set drawn once at fit time (so the reported per-epoch MSE is
    comparable across epochs), deterministic given ``seed``.

    ``timestep_min`` restricts training draws to timesteps >= that value:
    near alpha_bar = 1 the target map steepens like 1/sqrt(1 - alpha_bar)
    and those rows starve the rest of the objective.
    """

    def __init__(
        self,
        hidden_units: int = 64,
        epochs: int = 200,
        learning_rate: float = 0.01,
        batch_size: int = 32,
        draws_per_example: int = 32,
        timestep_min: int = 1,
        seed: int = 0,
    ):
        self.hidden_units = hidden_units
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.draws_per_example = draws_per_example
        self.timestep_min = timestep_min
        self.seed = seed

    def get_params(self, deep: bool = True) -> dict:
        return {
            "hidden_units": self.hidden_units,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "draws_per_example": self.draws_per_example,
            "timestep_min": self.timestep_min,
            "seed": self.seed,
        }

    def set_params(self, **params) -> "ToyDenoiser":
        for key, value in params.items():
            if key not in self.get_params():
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    # -- parameter packing ------------------------------------------------

    def _init_params(self, d: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        n_in = 2 * d + 1
        w1 = rng.standard_normal((n_in, self.hidden_units)) / np.sqrt(n_in)
        b1 = np.zeros(self.hidden_units)
        w2 = rng.standard_normal((self.hidden_units, d)) / np.sqrt(self.hidden_units)
        b2 = np.zeros(d)
        return np.concatenate([w1.ravel(), b1, w2.ravel(), b2])

    def _shapes(self, d: int) -> list[tuple[int, ...]]:
        n_in = 2 * d + 1
        return [(n_in, self.hidden_units), (self.hidden_units,), (self.hidden_units, d), (d,)]

    def _unpack(self, flat: np.ndarray, d: int):
        out, i = [], 0
        for shape in self._shapes(d):
            size = int(np.prod(shape))
            out.append(flat[i : i + size].reshape(shape))
            i += size
        return out

    # -- forward / loss ----------------------------------------------------

    def loss_and_grad(
        self, flat: np.ndarray, inputs: np.ndarray, targets: np.ndarray
    ) -> tuple[float, np.ndarray]:
        """Mean squared eps error over the batch and its analytic gradient."""
        d = targets.shape[1]
        w1, b1, w2, b2 = self._unpack(np.asarray(flat, dtype=np.float64), d)
        hidden = np.tanh(inputs @ w1 + b1)
        out = hidden @ w2 + b2
        resid = out - targets
        loss = float((resid**2).mean())
        dout = 2.0 * resid / resid.size
        g_w2 = hidden.T @ dout
        g_b2 = dout.sum(axis=0)
        dhidden = (dout @ w2.T) * (1.0 - hidden**2)
        g_w1 = inputs.T @ dhidden
        g_b1 = dhidden.sum(axis=0)
        grad = np.concatenate([g_w1.ravel(), g_b1, g_w2.ravel(), g_b2])
        return loss, grad

    def _corruptions(
        self, dataset, schedule: NoiseSchedule, rng: np.random.Generator
    ) -> tuple[np.ndarray, np.ndarray]:
        rows_x, rows_y = [], []
        for x0, condition in dataset:
            x0 = as_vector(x0, "x0")
            emb = condition.embedding
            for _ in range(self.draws_per_example):
                k = int(rng.integers(self.timestep_min, schedule.T + 1))
                ab = schedule.alpha_bar_at(k)
                eps = rng.standard_normal(x0.shape[0])
                z = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
                rows_x.append(np.concatenate([z, [ab], emb]))
                rows_y.append(eps)
        return np.asarray(rows_x), np.asarray(rows_y)

    def fit(self, dataset, schedule: NoiseSchedule) -> "ToyDenoiser":
        """dataset: iterable of (x0 vector, Condition) pairs."""
        dataset = list(dataset)
        if not dataset:
            raise ValueError("dataset is empty")
        if not 1 <= self.timestep_min <= schedule.T:
            raise ValueError(f"timestep_min must lie in [1, T={schedule.T}]")
        d = as_vector(dataset[0][0], "x0").shape[0]
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, 0xD1F]))
        inputs, targets = self._corruptions(dataset, schedule, rng)

        flat = self._init_params(d)
        m = np.zeros_like(flat)
        v = np.zeros_like(flat)
        step = 0
        history: list[float] = []
        n = inputs.shape[0]
        for _ in range(self.epochs):
            order = rng.permutation(n)
            epoch_loss = 0.0
            for lo in range(0, n, self.batch_size):
                idx = order[lo : lo + self.batch_size]
                loss, grad = self.loss_and_grad(flat, inputs[idx], targets[idx])
                epoch_loss += loss * idx.size
                step += 1
                m = 0.9 * m + 0.1 * grad
                v = 0.999 * v + 0.001 * grad * grad
                m_hat = m / (1.0 - 0.9**step)
                v_hat = v / (1.0 - 0.999**step)
                flat = flat - self.learning_rate * m_hat / (np.sqrt(v_hat) + 1e-8)
            history.append(epoch_loss / n)
            if not np.isfinite(history[-1]):
                raise TrainingDivergedError(f"epoch loss became {history[-1]}")

        self.d_ = d
        self.params_ = flat
        self.loss_history_ = history
        self.training_rows_ = (inputs, targets)
        return self

    # -- inference ----------------------------------------------------------

    def predict_eps(self, vector: np.ndarray, alpha_bar: float, condition: Condition) -> np.ndarray:
        vector = as_vector(vector, "latent vector", d=self.d_)
        w1, b1, w2, b2 = self._unpack(self.params_, self.d_)
        x = np.concatenate([vector, [alpha_bar], condition.embedding])
        return np.tanh(x @ w1 + b1) @ w2 + b2

    def predict_x0(self, vector: np.ndarray, alpha_bar: float, condition: Condition) -> np.ndarray:
        eps_hat = self.predict_eps(vector, alpha_bar, condition)
        return (vector - np.sqrt(1.0 - alpha_bar) * eps_hat) / np.sqrt(alpha_bar)


def train_toy_denoiser(dataset, schedule: NoiseSchedule, **params) -> ToyDenoiser:
    return ToyDenoiser(**params).fit(dataset, schedule)
