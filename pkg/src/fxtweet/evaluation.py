"""Chronological splitting, fixed-horizon metrics and order sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .exceptions import (
    Empty,
    FxTweetError,
    InsufficientHistory,
    LengthMismatch,
    TooShort,
    ValidationError,
)
from .models import ANNRegressor, ARXRegressor, PersistenceForecaster
from .models.series import AT_LEVEL, LOG_RETURN, as_series

KINDS = ("ar", "arx", "ann")
METRICS = ("rmse", "mae", "directional", "error_variance")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.6

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise TooShort(f"train_fraction must lie in (0, 1), got {self.train_fraction}")

    def train_size(self, n):
        # the epsilon keeps e.g. 0.7 * 10 from flooring to 6
        size = math.floor(self.train_fraction * n + 1e-9)
        if size < 1 or size >= n:
            raise TooShort(f"split of {n} points at {self.train_fraction} leaves an empty partition")
        return size


def split(series, spec=SplitSpec()):
    """First ``floor(fraction * n)`` points train, the remainder tests."""
    if not isinstance(spec, SplitSpec):
        spec = SplitSpec(spec)
    n = len(series)
    if n < 5:
        raise TooShort(f"need at least 5 points to split, got {n}")
    k = spec.train_size(n)
    return series.slice(None, k), series.slice(k, None)


def _pair(*arrays):
    arrays = [np.asarray(a, dtype=float).ravel() for a in arrays]
    if any(a.size != arrays[0].size for a in arrays):
        raise LengthMismatch(f"lengths differ: {[a.size for a in arrays]}")
    if arrays[0].size == 0:
        raise Empty("metrics need at least one point")
    return arrays


def rmse(predictions, actuals):
    p, a = _pair(predictions, actuals)
    return float(np.sqrt(np.mean((p - a) ** 2)))


def mae(predictions, actuals):
    p, a = _pair(predictions, actuals)
    return float(np.mean(np.abs(p - a)))


def direction_hits(predictions, actuals, lagged_actuals):
    """Per-point 1/0: actual and predicted moves from ``y(t - n_k)`` agree strictly."""
    p, a, lag = _pair(predictions, actuals, lagged_actuals)
    return ((a - lag) * (p - lag) > 0).astype(int)


def sign_hits(predicted_returns, actual_returns):
    p, a = _pair(predicted_returns, actual_returns)
    return (p * a > 0).astype(int)


def directional_accuracy(predictions, actuals, lagged_actuals):
    """Share of points whose predicted move has the actual move's strict sign.

    Zero moves, predicted or actual, count as misses.
    """
    return float(direction_hits(predictions, actuals, lagged_actuals).mean())


def sign_accuracy(predicted_returns, actual_returns):
    """Share of points with ``predicted * actual > 0``; zeros count as misses."""
    return float(sign_hits(predicted_returns, actual_returns).mean())


@dataclass(frozen=True)
class EvalMetrics:
    rmse: float
    mae: float
    directional: float
    error_variance: float
    n_points: int

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class ForecastBlock:
    """Static forecasts over a test block with the matching actuals."""

    index: np.ndarray
    predictions: np.ndarray
    actuals: np.ndarray
    lagged_actuals: np.ndarray
    representation: str

    def hits(self):
        if self.representation == LOG_RETURN:
            return sign_hits(self.predictions, self.actuals)
        return direction_hits(self.predictions, self.actuals, self.lagged_actuals)

    def predicted_signs(self):
        ref = 0.0 if self.representation == LOG_RETURN else self.lagged_actuals
        return np.sign(self.predictions - ref).astype(int)

    def actual_signs(self):
        ref = 0.0 if self.representation == LOG_RETURN else self.lagged_actuals
        return np.sign(self.actuals - ref).astype(int)


def forecast_block(model, series, start):
    """One static forecast per index ``start <= t < len(series)``.

    ``series`` holds the training prefix as lag history; predictions use
    observed values only, never earlier forecasts.
    """
    series = as_series(series)
    n_k = model.order_.n_k
    if start < model.order_.max_lag:
        raise InsufficientHistory(
            f"test block starting at {start} lacks lag history of {model.order_.max_lag}"
        )
    if start >= len(series):
        raise TooShort("empty test block")
    pred = model.predict(series.y, series.u)[start:]
    index = np.arange(start, len(series))
    return ForecastBlock(index, pred, series.y[start:].copy(), series.y[index - n_k],
                         series.representation)


def metrics_from_block(block):
    e = block.predictions - block.actuals
    n = e.size
    return EvalMetrics(
        rmse=rmse(block.predictions, block.actuals),
        mae=mae(block.predictions, block.actuals),
        directional=float(block.hits().mean()),
        error_variance=float(np.var(e, ddof=1)) if n > 1 else float("nan"),
        n_points=n,
    )


def evaluate(model, series, start):
    """Metrics of ``model`` on ``series[start:]``.

    The directional field is DA for at-level series and Sgn for log returns.
    """
    return metrics_from_block(forecast_block(model, series, start))


_LINEAR_PARAMS = ("rank_tol", "on_rank_deficient")
_ANN_PARAMS = ("hidden", "epochs", "learning_rate", "target_error")


def make_estimator(kind, n_a, n_b, n_k, random_state=0, **params):
    """Unfitted estimator for a sweep cell; irrelevant ``params`` are ignored."""
    if kind in ("ar", "arx"):
        return ARXRegressor(n_a=n_a, n_b=0 if kind == "ar" else n_b, n_k=n_k,
                            **{k: v for k, v in params.items() if k in _LINEAR_PARAMS})
    if kind == "ann":
        return ANNRegressor(n_a=n_a, n_b=n_b, n_k=n_k, random_state=random_state,
                            **{k: v for k, v in params.items() if k in _ANN_PARAMS})
    if kind in ("rw", "persistence"):
        return PersistenceForecaster(n_k=n_k)
    raise ValidationError(f"unknown model kind {kind!r}; expected one of {KINDS}")


def cell_seeds(base_seed, n_a, n_b, n_seeds):
    """Per-cell seeds derived from ``(base_seed, n_a, n_b)`` only."""
    ss = np.random.SeedSequence([int(base_seed), int(n_a), int(n_b)])
    return [int(s) for s in ss.generate_state(n_seeds, dtype=np.uint32)]


@dataclass
class SweepGrid:
    model_kind: str
    n_k: int
    representation: str
    n_a_values: list
    n_b_values: list
    cells: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    predictions: dict = field(default_factory=dict, repr=False)
    test_start: int = 0

    def matrix(self, metric):
        out = np.full((len(self.n_a_values), len(self.n_b_values)), np.nan)
        for i, na in enumerate(self.n_a_values):
            for j, nb in enumerate(self.n_b_values):
                cell = self.cells.get((na, nb))
                if cell is not None:
                    out[i, j] = getattr(cell, metric)
        return out

    def best(self, metric="rmse"):
        """``(n_a, n_b)`` minimizing an error metric, or maximizing ``directional``."""
        if not self.cells:
            raise Empty("no successful cells")
        sign = -1.0 if metric == "directional" else 1.0
        return min(self.cells, key=lambda k: (sign * getattr(self.cells[k], metric), k))

    def matrix_csv(self, metric):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n_a\\n_b"] + list(self.n_b_values))
        for na, row in zip(self.n_a_values, self.matrix(metric)):
            writer.writerow([na] + ["" if math.isnan(v) else repr(float(v)) for v in row])
        return buf.getvalue()

    def to_dict(self):
        return {
            "model_kind": self.model_kind,
            "n_k": self.n_k,
            "representation": self.representation,
            "n_a": list(self.n_a_values),
            "n_b": list(self.n_b_values),
            "test_start": self.test_start,
            "metrics": {
                m: [[None if math.isnan(v) else float(v) for v in row] for row in self.matrix(m)]
                for m in METRICS
            },
            "failures": {f"{na},{nb}": msg for (na, nb), msg in sorted(self.failures.items())},
            "best_rmse": list(self.best("rmse")) if self.cells else None,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _average(metrics):
    return EvalMetrics(
        rmse=float(np.mean([m.rmse for m in metrics])),
        mae=float(np.mean([m.mae for m in metrics])),
        directional=float(np.mean([m.directional for m in metrics])),
        error_variance=float(np.mean([m.error_variance for m in metrics])),
        n_points=metrics[0].n_points,
    )


def _run_cell(kind, series, train, start, n_a, n_b, n_k, seeds, params):
    metrics, preds = [], []
    for seed in seeds:
        est = make_estimator(kind, n_a, n_b, n_k, random_state=seed, **params)
        est.fit(train.y, train.u)
        block = forecast_block(est, series, start)
        metrics.append(metrics_from_block(block))
        full = np.full(len(series), np.nan)
        full[start:] = block.predictions
        preds.append(full)
    return _average(metrics), preds


def sweep(series, model_kind, n_a_range=range(1, 11), n_b_range=range(1, 11), n_k=1,
          split_spec=SplitSpec(), n_seeds=3, random_state=0, n_jobs=None, **params):
    """Fit and score every ``(n_a, n_b)`` cell on one shared test block.

    ``ar`` ignores ``n_b_range`` (a single ``n_b = 0`` column). ``ann`` cells
    average their metrics over ``n_seeds`` initializations. A cell that fails
    is recorded in ``failures`` and left out of ``cells``. ``predictions``
    keeps, per cell, one full-length array per seed with NaN before the test
    block, ready for :func:`fxtweet.trading.mean_cumulative_grid`.

    Extra keyword ``params`` reach the estimators (``epochs``,
    ``learning_rate``, ``on_rank_deficient`` ...).
    """
    if model_kind not in KINDS:
        raise ValidationError(f"unknown model kind {model_kind!r}; expected one of {KINDS}")
    series = as_series(series)
    n_a_values = [int(v) for v in n_a_range]
    n_b_values = [0] if model_kind == "ar" else [int(v) for v in n_b_range]
    if not n_a_values or not n_b_values:
        raise Empty("order ranges must be non-empty")
    start = split_spec.train_size(len(series))
    longest = n_k + max(max(n_a_values), max(n_b_values)) - 1
    if start <= longest:
        raise TooShort(f"training block of {start} points too short for lag {longest}")
    train = series.slice(None, start)

    jobs = []
    for na in n_a_values:
        for nb in n_b_values:
            seeds = cell_seeds(random_state, na, nb, n_seeds) if model_kind == "ann" else [None]
            jobs.append((na, nb, seeds))

    def run(na, nb, seeds):
        try:
            return (na, nb), _run_cell(model_kind, series, train, start, na, nb, n_k, seeds, params), None
        except FxTweetError as exc:
            return (na, nb), None, f"{type(exc).__name__}: {exc}"

    results = Parallel(n_jobs=n_jobs)(delayed(run)(*job) for job in jobs)
    grid = SweepGrid(model_kind, n_k, series.representation, n_a_values, n_b_values,
                     test_start=start)
    for key, out, err in results:
        if err is None:
            grid.cells[key], grid.predictions[key] = out
        else:
            grid.failures[key] = err
    return grid


def select_order(series, model_kind, n_a_range=range(1, 11), n_b_range=range(1, 11), n_k=1,
                 split_spec=SplitSpec(), inner_split=SplitSpec(0.75), metric="rmse", **kwargs):
    """Pick ``(n_a, n_b)`` without looking at the outer test block.

    The training block of ``split_spec`` is itself split by ``inner_split``
    and swept; the best cell on that inner hold-out is returned. Choosing the
    best cell on the outer test block instead would bias any test statistic
    computed on that block afterwards.
    """
    series = as_series(series)
    train = series.slice(None, split_spec.train_size(len(series)))
    inner = sweep(train, model_kind, n_a_range, n_b_range, n_k, inner_split, **kwargs)
    return inner.best(metric)


__all__ = [
    "AT_LEVEL",
    "LOG_RETURN",
    "EvalMetrics",
    "ForecastBlock",
    "SplitSpec",
    "SweepGrid",
    "cell_seeds",
    "direction_hits",
    "directional_accuracy",
    "evaluate",
    "forecast_block",
    "mae",
    "make_estimator",
    "metrics_from_block",
    "rmse",
    "select_order",
    "sign_accuracy",
    "sign_hits",
    "split",
    "sweep",
]
