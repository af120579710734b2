"""Aligned target/exogenous series, the model order, and lag matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import (
    InsufficientHistory,
    LengthMismatch,
    MissingExogenous,
    NonPositiveValue,
    TooShort,
    ValidationError,
)

AT_LEVEL = "at_level"
LOG_RETURN = "log_return"
REPRESENTATIONS = (AT_LEVEL, LOG_RETURN)


@dataclass(frozen=True)
class ModelOrder:
    n_a: int = 1
    n_b: int = 0
    n_k: int = 1

    def __post_init__(self):
        for name, low in (("n_a", 1), ("n_b", 0), ("n_k", 1)):
            value = getattr(self, name)
            if int(value) != value or value < low:
                raise ValidationError(f"{name} must be an integer >= {low}, got {value!r}")

    @property
    def n_inputs(self):
        return self.n_a + self.n_b

    @property
    def max_lag(self):
        """Oldest lag used, counted from the target index."""
        return self.n_k + max(self.n_a, self.n_b) - 1

    def as_dict(self):
        return {"n_a": self.n_a, "n_b": self.n_b, "n_k": self.n_k}


@dataclass(frozen=True, eq=False)
class AlignedSeries:
    """Target ``y`` and optional exogenous ``u`` on the same hourly grid."""

    y: np.ndarray
    u: np.ndarray | None = None
    representation: str = AT_LEVEL

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        object.__setattr__(self, "y", y)
        if self.u is not None:
            u = np.asarray(self.u, dtype=float).ravel()
            if u.shape != y.shape:
                raise LengthMismatch(f"y has {y.size} points but u has {u.size}")
            object.__setattr__(self, "u", u)
        if self.representation not in REPRESENTATIONS:
            raise ValidationError(f"unknown representation {self.representation!r}")

    def __len__(self):
        return self.y.size

    def slice(self, start=None, stop=None):
        u = None if self.u is None else self.u[start:stop]
        return AlignedSeries(self.y[start:stop], u, self.representation)


def as_series(y, u=None, representation=AT_LEVEL):
    if isinstance(y, AlignedSeries):
        return y
    return AlignedSeries(y, u, representation)


def log_returns(series):
    """Percent log returns ``100 * (ln y(t) - ln y(t-1))`` of both channels."""
    if series.representation != AT_LEVEL:
        raise ValidationError("log_returns expects an at_level series")
    if len(series) < 2:
        raise TooShort("need at least two points for a return")
    channels = [series.y] if series.u is None else [series.y, series.u]
    for c in channels:
        if np.any(~(c > 0)):
            raise NonPositiveValue("log returns need strictly positive values")
    y = 100.0 * np.diff(np.log(series.y))
    u = None if series.u is None else 100.0 * np.diff(np.log(series.u))
    return AlignedSeries(y, u, LOG_RETURN)


def _check_exogenous(series, order):
    if order.n_b > 0 and series.u is None:
        raise MissingExogenous(f"n_b={order.n_b} needs an exogenous series")


def lag_row(series, order, t):
    """Regressors for target index ``t``: y lags then u lags, newest first."""
    _check_exogenous(series, order)
    oldest = t - order.max_lag
    if oldest < 0 or t - order.n_k >= len(series):
        raise InsufficientHistory(
            f"target index {t} needs history back to index {oldest} "
            f"(series has {len(series)} points)"
        )
    newest = t - order.n_k
    row = [series.y[newest - i] for i in range(order.n_a)]
    if order.n_b:
        row += [series.u[newest - j] for j in range(order.n_b)]
    return np.asarray(row)


def build_lag_matrix(series, order):
    """Design rows and targets for every index with complete lag history.

    Returns
    -------
    X : ndarray of shape (n_rows, n_a + n_b)
    targets : ndarray of shape (n_rows,)
        ``n_rows = len(series) - (n_k + max(n_a, n_b) - 1)``.
    """
    _check_exogenous(series, order)
    n = len(series)
    first = order.max_lag
    n_rows = n - first
    if n_rows < 1:
        raise TooShort(f"series of length {n} too short for order {order.as_dict()}")
    X = np.empty((n_rows, order.n_inputs))
    t = np.arange(first, n)
    for i in range(order.n_a):
        X[:, i] = series.y[t - order.n_k - i]
    for j in range(order.n_b):
        X[:, order.n_a + j] = series.u[t - order.n_k - j]
    return X, series.y[first:].copy()


def lag_matrix_for_prediction(series, order):
    """Lag rows for every target index ``max_lag <= t < len(series)``.

    Identical to :func:`build_lag_matrix` minus the targets; an empty matrix
    is returned for series too short to hold a single row.
    """
    if len(series) <= order.max_lag:
        _check_exogenous(series, order)
        return np.empty((0, order.n_inputs))
    return build_lag_matrix(series, order)[0]
