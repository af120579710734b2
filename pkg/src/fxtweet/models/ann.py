"""Two-hidden-layer feedforward regressor trained by backpropagation.

Architecture ``(n_a + n_b) -> H -> H -> 1`` (``H = 4`` by default), hidden
activation ``f(x) = 2 / (1 + exp(-2x)) - 1`` and a linear output neuron.
Inputs and target are standardized with training-set statistics; the
training objective is half the mean squared error in standardized units.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator

from ..exceptions import DivergedLoss, ShapeMismatch, ValidationError
from .base import LagForecasterMixin
from .series import ModelOrder, as_series, build_lag_matrix, lag_row

DEFAULT_HIDDEN = 4
DEFAULT_EPOCHS = 100
DEFAULT_LEARNING_RATE = 0.05
DEFAULT_TARGET_ERROR = 0.1

PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")


class BaumHausslerWarning(UserWarning):
    """Issued when the network has too many weights for its training set."""


def activation(x):
    """``2 / (1 + exp(-2x)) - 1``, evaluated as the identical ``tanh(x)``."""
    return np.tanh(x)


@dataclass(frozen=True, eq=False)
class AnnModel:
    """Network weights plus the standardization learned on the training set.

    ``params`` holds ``(W1, b1, W2, b2, W3, b3)`` with ``W`` of shape
    ``(fan_out, fan_in)``.
    """

    order: ModelOrder
    params: tuple
    input_mean: np.ndarray
    input_std: np.ndarray
    target_mean: float = 0.0
    target_std: float = 1.0
    seed: int = 0

    @property
    def hidden(self):
        return self.params[0].shape[0]

    @property
    def n_weights(self):
        return int(sum(p.size for p in self.params))

    def with_params(self, params):
        return replace(self, params=tuple(np.array(p, dtype=float) for p in params))

    def to_dict(self):
        return {
            "order": self.order.as_dict(),
            "seed": self.seed,
            "scaler": {
                "input_mean": self.input_mean.tolist(),
                "input_std": self.input_std.tolist(),
                "target_mean": self.target_mean,
                "target_std": self.target_std,
            },
            "weights": {name: p.tolist() for name, p in zip(PARAM_NAMES, self.params)},
        }

    @classmethod
    def from_dict(cls, d):
        sc = d["scaler"]
        params = tuple(np.asarray(d["weights"][name], dtype=float) for name in PARAM_NAMES)
        return cls(ModelOrder(**d["order"]), params, np.asarray(sc["input_mean"], dtype=float),
                   np.asarray(sc["input_std"], dtype=float), float(sc["target_mean"]),
                   float(sc["target_std"]), int(d["seed"]))

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def init_ann(order, seed, hidden=DEFAULT_HIDDEN):
    """Uniform ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]`` weights and biases."""
    rng = np.random.default_rng(seed)
    sizes = [order.n_inputs, hidden, hidden, 1]
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        params.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        params.append(rng.uniform(-bound, bound, size=fan_out))
    n_in = order.n_inputs
    return AnnModel(order, tuple(params), np.zeros(n_in), np.ones(n_in), 0.0, 1.0,
                    int(seed) if np.isscalar(seed) else 0)


def count_weights(n_inputs, hidden=DEFAULT_HIDDEN):
    return (n_inputs * hidden + hidden) + (hidden * hidden + hidden) + (hidden + 1)


def baum_haussler_check(n_weights, n_train, target_error):
    """True iff ``n_weights < target_error * n_train``."""
    if n_train <= 0 or target_error <= 0:
        raise ValidationError("n_train and target_error must be positive")
    return n_weights < target_error * n_train


def _forward(params, Z):
    W1, b1, W2, b2, W3, b3 = params
    h1 = activation(Z @ W1.T + b1)
    h2 = activation(h1 @ W2.T + b2)
    return h1, h2, (h2 @ W3.T + b3)[:, 0]


def _standardize(model, X):
    return (np.asarray(X, dtype=float) - model.input_mean) / model.input_std


def _check_batch(model, X, targets):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    targets = np.asarray(targets, dtype=float).ravel()
    if X.shape[1] != model.order.n_inputs:
        raise ShapeMismatch(f"rows have {X.shape[1]} columns, network expects {model.order.n_inputs}")
    if X.shape[0] != targets.size:
        raise ShapeMismatch(f"{X.shape[0]} rows but {targets.size} targets")
    if targets.size == 0:
        raise ShapeMismatch("empty batch")
    return X, targets


def ann_loss(model, X, targets, params=None):
    """Half mean squared error in standardized target units."""
    X, targets = _check_batch(model, X, targets)
    params = model.params if params is None else params
    out = _forward(params, _standardize(model, X))[2]
    resid = out - (targets - model.target_mean) / model.target_std
    return 0.5 * float(np.mean(resid**2))


def ann_gradient(model, X, targets):
    """Analytic gradient of :func:`ann_loss` for every weight and bias.

    Returns a tuple ordered like ``model.params``.
    """
    X, targets = _check_batch(model, X, targets)
    W1, b1, W2, b2, W3, b3 = model.params
    Z = _standardize(model, X)
    h1, h2, out = _forward(model.params, Z)
    n = targets.size
    delta3 = (out - (targets - model.target_mean) / model.target_std)[:, None] / n
    gW3 = delta3.T @ h2
    gb3 = delta3.sum(axis=0)
    delta2 = (delta3 @ W3) * (1.0 - h2**2)
    gW2 = delta2.T @ h1
    gb2 = delta2.sum(axis=0)
    delta1 = (delta2 @ W2) * (1.0 - h1**2)
    gW1 = delta1.T @ Z
    gb1 = delta1.sum(axis=0)
    return (gW1, gb1, gW2, gb2, gW3, gb3)


def _fit_scaler(model, X, targets):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    t_mean = float(targets.mean())
    t_std = float(targets.std())
    return replace(model, input_mean=mean, input_std=std, target_mean=t_mean,
                   target_std=t_std if t_std > 0 else 1.0)


def train_ann(model, train, epochs=DEFAULT_EPOCHS, learning_rate=DEFAULT_LEARNING_RATE,
              target_error=DEFAULT_TARGET_ERROR, return_history=False):
    """Full-batch gradient descent on the training lag matrix.

    The scaler is always refit to ``train``; with ``epochs=0`` the weights
    are returned untouched.

    Raises
    ------
    DivergedLoss
        The loss became non-finite.
    """
    if learning_rate <= 0:
        raise ValidationError("learning_rate must be positive")
    if epochs < 0:
        raise ValidationError("epochs must be non-negative")
    X, targets = build_lag_matrix(train, model.order)
    if not baum_haussler_check(model.n_weights, X.shape[0], target_error):
        warnings.warn(
            f"{model.n_weights} weights vs {X.shape[0]} training rows fails "
            f"N_w < {target_error} * N",
            BaumHausslerWarning,
            stacklevel=2,
        )
    model = _fit_scaler(model, X, targets)
    params = [p.copy() for p in model.params]
    history = [ann_loss(model, X, targets)]
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(int(epochs)):
            grads = ann_gradient(model, X, targets)
            params = [p - learning_rate * g for p, g in zip(params, grads)]
            model = model.with_params(params)
            loss = ann_loss(model, X, targets)
            if not math.isfinite(loss):
                raise DivergedLoss(f"loss became {loss} at epoch {len(history)}")
            history.append(loss)
    if return_history:
        return model, np.asarray(history)
    return model


def predict_rows(model, X):
    out = _forward(model.params, _standardize(model, np.atleast_2d(X)))[2]
    return out * model.target_std + model.target_mean


def predict_ann(model, history, t):
    row = lag_row(as_series(history), model.order, t)
    return float(predict_rows(model, row[None, :])[0])


class ANNRegressor(LagForecasterMixin, BaseEstimator):
    """Feedforward network forecaster on the ARX lag structure.

    Parameters
    ----------
    n_a, n_b, n_k : int
        Lag structure, as for :class:`ARXRegressor`.
    hidden : int, default=4
        Width of both hidden layers.
    epochs : int, default=100
    learning_rate : float, default=0.05
    random_state : int, default=0
        Seed of the weight initialization.
    target_error : float, default=0.1
        Expected approximation error for the weight-count warning.
    """

    def __init__(self, n_a=1, n_b=0, n_k=1, hidden=DEFAULT_HIDDEN, epochs=DEFAULT_EPOCHS,
                 learning_rate=DEFAULT_LEARNING_RATE, random_state=0,
                 target_error=DEFAULT_TARGET_ERROR):
        self.n_a = n_a
        self.n_b = n_b
        self.n_k = n_k
        self.hidden = hidden
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.random_state = random_state
        self.target_error = target_error

    def fit(self, y, u=None):
        order = self._order()
        model = init_ann(order, self.random_state, self.hidden)
        self.model_, self.loss_curve_ = train_ann(
            model, as_series(y, u), self.epochs, self.learning_rate, self.target_error,
            return_history=True,
        )
        self.order_ = order
        return self

    def _predict_rows(self, X):
        return predict_rows(self.model_, X)
