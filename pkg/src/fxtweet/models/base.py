"""Shared forecaster plumbing for the sklearn-style estimators."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .series import ModelOrder, as_series, lag_matrix_for_prediction, lag_row


class LagForecasterMixin:
    """Static one-step forecasting over a lag structure.

    Subclasses implement ``_predict_rows(X)`` on raw lag rows and expose
    ``order_`` after fitting. ``predict`` never feeds forecasts back as
    inputs: every prediction is built from observed history only.
    """

    def _order(self):
        return ModelOrder(self.n_a, self.n_b, self.n_k)

    def predict(self, y, u=None):
        """Forecast every index of ``y`` from its observed lags.

        Returns an array of ``len(y)`` with NaN where the lag history is
        incomplete (the first ``n_k + max(n_a, n_b) - 1`` entries).
        """
        check_is_fitted(self)
        series = as_series(y, u)
        X = lag_matrix_for_prediction(series, self.order_)
        out = np.full(len(series), np.nan)
        if X.shape[0]:
            out[self.order_.max_lag:] = self._predict_rows(X)
        return out

    def predict_at(self, y, u=None, t=None):
        """Forecast index ``t``; ``t`` may run up to ``len(y) - 1 + n_k``."""
        check_is_fitted(self)
        series = as_series(y, u)
        if t is None:
            t = len(series) - 1 + self.order_.n_k
        row = lag_row(series, self.order_, t)
        return float(self._predict_rows(row[None, :])[0])


class PersistenceForecaster(LagForecasterMixin, BaseEstimator):
    """Random-walk benchmark ``y_hat(t) = y(t - n_k)``."""

    def __init__(self, n_k=1):
        self.n_k = n_k

    n_a = property(lambda self: 1)
    n_b = property(lambda self: 0)

    def fit(self, y=None, u=None):
        self.order_ = ModelOrder(1, 0, self.n_k)
        return self

    def _predict_rows(self, X):
        return X[:, 0].copy()

