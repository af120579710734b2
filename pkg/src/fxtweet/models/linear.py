"""Least-squares AR / ARX models.

Coefficients are stored in regression convention,
``y_hat(t) = sum_i a_i y(t-n_k-i+1) + sum_j b_j u(t-n_k-j+1)``.
The polynomial convention writes the AR part as ``A(z^-1) y(t) = e(t)`` with
a monic leading term, so its ``a`` coefficients are the negated regression
ones: a random walk is ``a_1 = 1`` here and ``a_1 = -1`` there.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ..exceptions import RankDeficient, TooShort, ValidationError
from .base import LagForecasterMixin
from .series import ModelOrder, as_series, build_lag_matrix, lag_row

REGRESSION = "regression"
POLYNOMIAL = "polynomial"
CONVENTIONS = (REGRESSION, POLYNOMIAL)

RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Fitted ARX coefficients in either sign convention."""

    order: ModelOrder
    a_coeffs: np.ndarray
    b_coeffs: np.ndarray
    coeff_std: np.ndarray
    convention: str = REGRESSION
    residual_variance: float = field(default=float("nan"))

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise ValidationError(f"unknown convention {self.convention!r}")
        a = np.asarray(self.a_coeffs, dtype=float).ravel()
        b = np.asarray(self.b_coeffs, dtype=float).ravel()
        s = np.asarray(self.coeff_std, dtype=float).ravel()
        if a.size != self.order.n_a or b.size != self.order.n_b:
            raise ValidationError("coefficient counts do not match the order")
        if s.size != a.size + b.size:
            raise ValidationError("coeff_std must have one entry per coefficient")
        object.__setattr__(self, "a_coeffs", a)
        object.__setattr__(self, "b_coeffs", b)
        object.__setattr__(self, "coeff_std", s)

    def in_convention(self, convention):
        """Return the same model with ``a`` coefficients in ``convention``."""
        if convention not in CONVENTIONS:
            raise ValidationError(f"unknown convention {convention!r}")
        if convention == self.convention:
            return self
        return LinearModel(self.order, -self.a_coeffs, self.b_coeffs, self.coeff_std,
                           convention, self.residual_variance)

    @property
    def polynomial_a_coeffs(self):
        return self.in_convention(POLYNOMIAL).a_coeffs

    @property
    def coef(self):
        """Regression-convention coefficient vector ``[a..., b...]``."""
        return np.concatenate([self.in_convention(REGRESSION).a_coeffs, self.b_coeffs])

    def predict_rows(self, X):
        return np.asarray(X, dtype=float) @ self.coef

    def to_dict(self):
        return {
            "order": self.order.as_dict(),
            "convention": self.convention,
            "a_coeffs": self.a_coeffs.tolist(),
            "b_coeffs": self.b_coeffs.tolist(),
            "coeff_std": self.coeff_std.tolist(),
            "residual_variance": self.residual_variance,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(ModelOrder(**d["order"]), d["a_coeffs"], d["b_coeffs"], d["coeff_std"],
                   d.get("convention", REGRESSION), d.get("residual_variance", float("nan")))

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _solve(X, target, rank_tol, on_rank_deficient):
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    keep = s > rank_tol * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    rank = int(keep.sum())
    if rank < X.shape[1]:
        msg = f"design matrix has rank {rank} < {X.shape[1]} columns"
        if on_rank_deficient == "raise":
            raise RankDeficient(msg)
        warnings.warn(msg + "; using the minimum-norm solution", RuntimeWarning, stacklevel=3)
    s_inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    coef = Vt.T @ (s_inv * (U.T @ target))
    # diag((X^T X)^+) from the same factorization
    cov_diag = np.sum((Vt.T * s_inv) ** 2, axis=1)
    return coef, cov_diag


def fit_linear(train, order, rank_tol=RANK_TOL, on_rank_deficient="raise"):
    """Ordinary least squares on the lag matrix of ``train``.

    Solved through an SVD of the design matrix; columns whose singular value
    falls below ``rank_tol`` times the largest one count as collinear.
    Standard deviations come from ``sigma2 * diag((X^T X)^-1)`` with
    ``sigma2 = RSS / (rows - columns)``.
    """
    if on_rank_deficient not in ("raise", "min_norm"):
        raise ValidationError("on_rank_deficient must be 'raise' or 'min_norm'")
    X, target = build_lag_matrix(train, order)
    rows, cols = X.shape
    if rows < cols:
        raise TooShort(f"{rows} rows cannot determine {cols} coefficients")
    coef, cov_diag = _solve(X, target, rank_tol, on_rank_deficient)
    resid = target - X @ coef
    dof = rows - cols
    sigma2 = float(resid @ resid / dof) if dof > 0 else float("nan")
    std = np.sqrt(np.maximum(sigma2 * cov_diag, 0.0)) if dof > 0 else np.full(cols, np.nan)
    return LinearModel(order, coef[:order.n_a], coef[order.n_a:], std, REGRESSION, sigma2)


def predict_linear(model, history, t):
    """Forecast ``y(t)`` from observed values at indices ``<= t - n_k``."""
    row = lag_row(as_series(history), model.order, t)
    return float(model.predict_rows(row[None, :])[0])


class ARXRegressor(LagForecasterMixin, BaseEstimator):
    """Least-squares ARX(n_a, n_b, n_k) forecaster; ``n_b=0`` gives pure AR.

    Parameters
    ----------
    n_a : int, default=1
        Number of lags of the target.
    n_b : int, default=0
        Number of lags of the exogenous series.
    n_k : int, default=1
        Pure delay: the newest regressor is at ``t - n_k``.
    rank_tol : float, default=1e-10
        Relative singular-value cutoff for collinearity.
    on_rank_deficient : {'raise', 'min_norm'}, default='raise'
        ``'min_norm'`` warns and keeps the minimum-norm least-squares fit.

    Attributes
    ----------
    model_ : LinearModel
    coef_ : ndarray of shape (n_a + n_b,)
    coef_std_ : ndarray of shape (n_a + n_b,)
    order_ : ModelOrder

    Examples
    --------
    >>> import numpy as np
    >>> y = np.cumsum(np.random.default_rng(0).normal(size=500)) + 100
    >>> ARXRegressor(n_a=1).fit(y).coef_.round(2)
    array([1.])
    """

    def __init__(self, n_a=1, n_b=0, n_k=1, rank_tol=RANK_TOL, on_rank_deficient="raise"):
        self.n_a = n_a
        self.n_b = n_b
        self.n_k = n_k
        self.rank_tol = rank_tol
        self.on_rank_deficient = on_rank_deficient

    def fit(self, y, u=None):
        series = as_series(y, u)
        order = self._order()
        self.model_ = fit_linear(series, order, self.rank_tol, self.on_rank_deficient)
        self.order_ = order
        self.coef_ = self.model_.coef
        self.coef_std_ = self.model_.coeff_std
        return self

    def _predict_rows(self, X):
        return self.model_.predict_rows(X)
