"""Moving-average trading simulation driven by model forecasts.

At each tradable index ``t`` the position ``sigma(t)`` is long (+1) when the
forecast ``y_hat(t)`` exceeds the m-hour moving average of observed closes
and short (-1) otherwise; it earns ``sigma(t) * 100 * (y(t) - y(t-n_k)) /
y(t-n_k)`` percent.

By default the moving average is taken at decision time ``t - n_k`` so no
close later than the position opening enters the signal. ``literal_ma=True``
uses the average ending at ``t`` instead.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import Empty, InsufficientHistory, LengthMismatch, ValidationError


@dataclass(frozen=True)
class TradingConfig:
    m: int = 4
    n_k: int = 1
    literal_ma: bool = False
    tie_signal: int = -1
    compound: bool = False

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValidationError(f"m must be a positive integer, got {self.m}")
        if int(self.n_k) != self.n_k or self.n_k < 1:
            raise ValidationError(f"n_k must be a positive integer, got {self.n_k}")
        if self.tie_signal not in (-1, 1):
            raise ValidationError("tie_signal must be +1 or -1")

    @property
    def first_tradable(self):
        if self.literal_ma:
            return max(self.m - 1, self.n_k)
        return self.n_k + self.m - 1


@dataclass(frozen=True, eq=False)
class TradeLedger:
    t: np.ndarray
    signal: np.ndarray
    return_pct: np.ndarray
    cumulative_pct: np.ndarray

    @property
    def final_cumulative(self):
        return float(self.cumulative_pct[-1]) if self.cumulative_pct.size else 0.0

    def __len__(self):
        return self.t.size

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "signal", "return_pct", "cumulative_pct"])
        for row in zip(self.t, self.signal, self.return_pct, self.cumulative_pct):
            writer.writerow([int(row[0]), int(row[1]), repr(float(row[2])), repr(float(row[3]))])
        return buf.getvalue()


def moving_average(y, m, t):
    """Mean of ``y[t-m+1 .. t]``."""
    if t < m - 1 or t >= len(y) or m < 1:
        raise InsufficientHistory(f"moving average of order {m} undefined at index {t}")
    return float(np.mean(np.asarray(y[t - m + 1:t + 1], dtype=float)))


def signal(prediction, ma, tie=-1):
    if prediction > ma:
        return 1
    if prediction < ma:
        return -1
    return tie


def simulate(predictions, actuals, config=TradingConfig()):
    """Trade every index that has a finite forecast and enough MA history.

    ``predictions[t]`` is the forecast of ``actuals[t]``; NaN entries are
    skipped.
    """
    p = np.asarray(predictions, dtype=float).ravel()
    y = np.asarray(actuals, dtype=float).ravel()
    if p.size != y.size:
        raise LengthMismatch(f"{p.size} predictions vs {y.size} actuals")
    first = config.first_tradable
    if y.size <= first:
        raise InsufficientHistory(f"need more than {first} points to trade with m={config.m}")
    # rolling mean of y ending at each index
    csum = np.concatenate([[0.0], np.cumsum(y)])
    ma_end = np.full(y.size, np.nan)
    ma_end[config.m - 1:] = (csum[config.m:] - csum[:-config.m]) / config.m

    t = np.arange(first, y.size)
    t = t[np.isfinite(p[t])]
    ma = ma_end[t] if config.literal_ma else ma_end[t - config.n_k]
    sig = np.where(p[t] > ma, 1, np.where(p[t] < ma, -1, config.tie_signal))
    base = y[t - config.n_k]
    ret = sig * (y[t] - base) / base * 100.0
    if config.compound:
        cum = (np.cumprod(1.0 + ret / 100.0) - 1.0) * 100.0
    else:
        cum = np.cumsum(ret)
    return TradeLedger(t, sig.astype(int), ret, cum)


def mean_cumulative_grid(cell_predictions, actuals, config=TradingConfig(), n_a_values=None,
                         n_b_values=None):
    """Final cumulative return per ``(n_a, n_b)`` cell.

    ``cell_predictions`` maps ``(n_a, n_b)`` to one prediction array or a list
    of arrays (one per seed); lists are averaged after simulating each.
    Cells whose simulation fails hold NaN.
    """
    if not cell_predictions:
        raise Empty("no cells to simulate")
    if n_a_values is None:
        n_a_values = sorted({k[0] for k in cell_predictions})
    if n_b_values is None:
        n_b_values = sorted({k[1] for k in cell_predictions})
    grid = np.full((len(n_a_values), len(n_b_values)), np.nan)
    for i, na in enumerate(n_a_values):
        for j, nb in enumerate(n_b_values):
            preds = cell_predictions.get((na, nb))
            if preds is None:
                continue
            runs = preds if isinstance(preds, (list, tuple)) else [preds]
            try:
                grid[i, j] = np.mean([simulate(r, actuals, config).final_cumulative for r in runs])
            except (InsufficientHistory, LengthMismatch):
                grid[i, j] = math.nan
    return grid


def grid_csv(grid, n_a_values, n_b_values):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n_a\\n_b"] + list(n_b_values))
    for na, row in zip(n_a_values, grid):
        writer.writerow([na] + ["" if math.isnan(v) else repr(float(v)) for v in row])
    return buf.getvalue()
