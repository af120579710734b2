"""Resampling significance tests for directional skill and error differences.

Every resample ``i`` draws from its own generator spawned from
``SeedSequence(seed)``, so results depend only on ``(inputs, B, seed)`` and
not on the order in which resamples are computed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import LengthMismatch, TooFewPoints, ValidationError

DEFAULT_B = 5000
MIN_POINTS = 10
MIN_RESAMPLES = 100
HISTOGRAM_BINS = 50


@dataclass(frozen=True, eq=False)
class ResampleResult:
    observed: float
    distribution: np.ndarray
    p_value: float
    B: int
    seed: int
    method: str = ""

    def confidence_interval(self, level=0.95):
        tail = (1.0 - level) / 2.0 * 100.0
        lo, hi = np.percentile(self.distribution, [tail, 100.0 - tail])
        return float(lo), float(hi)

    @property
    def standard_error(self):
        return float(np.std(self.distribution, ddof=1))

    def histogram(self, bins=HISTOGRAM_BINS):
        lo, hi = float(self.distribution.min()), float(self.distribution.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        counts, edges = np.histogram(self.distribution, bins=bins, range=(lo, hi))
        return counts, edges

    def to_dict(self):
        counts, edges = self.histogram()
        lo, hi = self.confidence_interval()
        return {
            "method": self.method,
            "observed": float(self.observed),
            "p_value": float(self.p_value),
            "B": int(self.B),
            "seed": int(self.seed),
            "mean": float(self.distribution.mean()),
            "std": self.standard_error,
            "ci95": [lo, hi],
            "histogram": {"counts": counts.tolist(), "edges": edges.tolist()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _streams(seed, B):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(B)]


def _check_B(B):
    if int(B) != B or B < MIN_RESAMPLES:
        raise ValidationError(f"B must be an integer >= {MIN_RESAMPLES}, got {B}")
    return int(B)


def bootstrap_statistic(indicators, B=DEFAULT_B, seed=0, null_value=0.5):
    """Case-resampling bootstrap of the mean of 0/1 hit indicators.

    ``p_value`` is the add-one share of resampled accuracies at or below
    ``null_value``; the distribution's percentiles give confidence intervals.
    """
    x = np.asarray(indicators, dtype=float).ravel()
    if x.size < MIN_POINTS:
        raise TooFewPoints(f"need at least {MIN_POINTS} indicators, got {x.size}")
    B = _check_B(B)
    n = x.size
    dist = np.array([x[rng.integers(0, n, size=n)].mean() for rng in _streams(seed, B)])
    p = (1 + np.count_nonzero(dist <= null_value)) / (B + 1)
    return ResampleResult(float(x.mean()), dist, float(min(p, 1.0)), B, int(seed), "bootstrap")


def permutation_null(predicted_signs, actual_signs, B=DEFAULT_B, seed=0):
    """Permutation test of sign agreement against the no-skill null.

    Each resample shuffles ``predicted_signs`` and recomputes the share of
    strictly positive products with the fixed ``actual_signs``;
    ``p = (1 + #{null >= observed}) / (B + 1)``.
    """
    p_sig = np.asarray(predicted_signs, dtype=float).ravel()
    a_sig = np.asarray(actual_signs, dtype=float).ravel()
    if p_sig.size != a_sig.size:
        raise LengthMismatch(f"{p_sig.size} predicted vs {a_sig.size} actual signs")
    if p_sig.size < MIN_POINTS:
        raise TooFewPoints(f"need at least {MIN_POINTS} points, got {p_sig.size}")
    p_sig, a_sig = np.sign(p_sig), np.sign(a_sig)
    B = _check_B(B)
    observed = float(np.mean(p_sig * a_sig > 0))
    dist = np.array([np.mean(rng.permutation(p_sig) * a_sig > 0) for rng in _streams(seed, B)])
    # shares are multiples of 1/n; compare with a tolerance below that grid
    tol = 0.5 / p_sig.size
    p = (1 + np.count_nonzero(dist >= observed - tol)) / (B + 1)
    return ResampleResult(observed, dist, float(p), B, int(seed), "permutation")


def accuracy_difference_test(errors_a, errors_b, B=DEFAULT_B, seed=0):
    """Paired bootstrap of ``mean|e_a| - mean|e_b|`` on a shared test set.

    The two-sided p-value is twice the add-one share of resampled
    differences on the far side of zero, capped at 1.
    """
    a = np.abs(np.asarray(errors_a, dtype=float).ravel())
    b = np.abs(np.asarray(errors_b, dtype=float).ravel())
    if a.size != b.size:
        raise LengthMismatch(f"{a.size} vs {b.size} paired errors")
    if a.size < 2:
        raise TooFewPoints("need at least two paired errors")
    B = _check_B(B)
    d = a - b
    n = d.size
    dist = np.array([d[rng.integers(0, n, size=n)].mean() for rng in _streams(seed, B)])
    below = np.count_nonzero(dist <= 0)
    above = np.count_nonzero(dist >= 0)
    p = min(1.0, 2.0 * (1 + min(below, above)) / (B + 1))
    return ResampleResult(float(d.mean()), dist, float(p), B, int(seed), "paired_bootstrap")
