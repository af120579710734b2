"""Alpha-stable fitting, sampling, goodness of fit and sparse-day gap filling.

Parameters use Nolan's S0 convention, in which ``location`` moves
continuously with ``alpha`` (S1 locations diverge near ``alpha = 1`` when
``beta != 0``). For ``alpha = 2`` the law is ``Normal(location, sqrt(2) *
scale)``; for ``alpha = 1, beta = 0`` it is ``Cauchy(location, scale)``.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .exceptions import (
    DegenerateSamples,
    InvalidParams,
    NoObservationsForDay,
    TooFewSamples,
)
from .ingest import HourlyBar, volume_weighted_mean

__all__ = [
    "StableParams",
    "GofResult",
    "estimate_stable",
    "sample_stable",
    "ks_test",
    "kolmogorov_sf",
    "fill_sparse_day",
    "sparse_days",
    "fill_bar_gaps",
    "DEFAULT_SPARSE_THRESHOLD",
]

DEFAULT_SPARSE_THRESHOLD = 4
MIN_ESTIMATION_SAMPLES = 20
MIN_KS_SAMPLES = 5


@dataclass(frozen=True)
class StableParams:
    alpha: float
    beta: float
    scale: float
    location: float

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise InvalidParams(f"alpha must lie in (0, 2], got {self.alpha}")
        if not -1 <= self.beta <= 1:
            raise InvalidParams(f"beta must lie in [-1, 1], got {self.beta}")
        if not self.scale >= 0 or not math.isfinite(self.scale):
            raise InvalidParams(f"scale must be non-negative, got {self.scale}")
        if not math.isfinite(self.location):
            raise InvalidParams(f"location must be finite, got {self.location}")

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(float(d["alpha"]), float(d["beta"]), float(d["scale"]), float(d["location"]))


@dataclass(frozen=True)
class GofResult:
    statistic: float
    p_value: float
    sample_size: int


# McCulloch (1986) lookup tables, Tables III-V and VII.
_NU_ALPHA = np.array([2.439, 2.5, 2.6, 2.7, 2.8, 3.0, 3.2, 3.5, 4.0, 5.0, 6.0, 8.0, 10.0, 15.0, 25.0])
_NU_BETA = np.array([0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0])
_ALPHA_TABLE = np.array([
    [2.000, 2.000, 2.000, 2.000, 2.000, 2.000, 2.000],
    [1.916, 1.924, 1.924, 1.924, 1.924, 1.924, 1.924],
    [1.808, 1.813, 1.829, 1.829, 1.829, 1.829, 1.829],
    [1.729, 1.730, 1.737, 1.745, 1.745, 1.745, 1.745],
    [1.664, 1.663, 1.663, 1.668, 1.676, 1.676, 1.676],
    [1.563, 1.560, 1.553, 1.548, 1.547, 1.547, 1.547],
    [1.484, 1.480, 1.471, 1.460, 1.448, 1.438, 1.438],
    [1.391, 1.386, 1.378, 1.364, 1.337, 1.318, 1.318],
    [1.279, 1.273, 1.266, 1.250, 1.210, 1.184, 1.150],
    [1.128, 1.121, 1.114, 1.101, 1.067, 1.027, 0.973],
    [1.029, 1.021, 1.014, 1.004, 0.974, 0.935, 0.874],
    [0.896, 0.892, 0.884, 0.883, 0.855, 0.823, 0.769],
    [0.818, 0.812, 0.806, 0.801, 0.780, 0.756, 0.691],
    [0.698, 0.695, 0.692, 0.689, 0.676, 0.656, 0.597],
    [0.593, 0.590, 0.588, 0.586, 0.579, 0.563, 0.513],
])
_BETA_TABLE = np.array([
    [0, 2.160, 1.000, 1.000, 1.000, 1.000, 1.000],
    [0, 1.592, 3.390, 1.000, 1.000, 1.000, 1.000],
    [0, 0.759, 1.800, 1.000, 1.000, 1.000, 1.000],
    [0, 0.482, 1.048, 1.694, 1.000, 1.000, 1.000],
    [0, 0.360, 0.760, 1.232, 2.229, 1.000, 1.000],
    [0, 0.253, 0.518, 0.823, 1.575, 1.000, 1.000],
    [0, 0.203, 0.410, 0.632, 1.244, 1.906, 1.000],
    [0, 0.165, 0.332, 0.499, 0.943, 1.560, 1.000],
    [0, 0.136, 0.271, 0.404, 0.689, 1.230, 2.195],
    [0, 0.109, 0.216, 0.323, 0.539, 0.827, 1.917],
    [0, 0.096, 0.190, 0.284, 0.472, 0.693, 1.759],
    [0, 0.082, 0.163, 0.243, 0.412, 0.601, 1.596],
    [0, 0.074, 0.147, 0.220, 0.377, 0.546, 1.482],
    [0, 0.064, 0.128, 0.191, 0.330, 0.478, 1.362],
    [0, 0.056, 0.112, 0.167, 0.285, 0.428, 1.274],
])
_ALPHA_GRID = np.array([0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0])
_BETA_GRID = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
# rows ordered by increasing alpha
_NU_C_TABLE = np.array([
    [2.588, 3.073, 4.534, 6.636, 9.144],
    [2.337, 2.634, 3.542, 4.808, 6.247],
    [2.189, 2.392, 3.004, 3.844, 4.775],
    [2.098, 2.244, 2.676, 3.265, 3.912],
    [2.040, 2.149, 2.461, 2.886, 3.356],
    [2.000, 2.085, 2.311, 2.624, 2.973],
    [1.980, 2.040, 2.205, 2.435, 2.696],
    [1.965, 2.007, 2.125, 2.294, 2.491],
    [1.955, 1.984, 2.067, 2.188, 2.333],
    [1.946, 1.967, 2.022, 2.106, 2.211],
    [1.939, 1.952, 1.988, 2.045, 2.116],
    [1.933, 1.940, 1.962, 1.997, 2.043],
    [1.927, 1.930, 1.943, 1.961, 1.987],
    [1.921, 1.922, 1.927, 1.936, 1.947],
    [1.914, 1.915, 1.916, 1.918, 1.921],
    [1.908, 1.908, 1.908, 1.908, 1.908],
])
_NU_ZETA_TABLE = np.array([
    [0, -0.061, -0.279, -0.659, -1.198],
    [0, -0.078, -0.272, -0.581, -0.997],
    [0, -0.089, -0.262, -0.520, -0.853],
    [0, -0.096, -0.250, -0.469, -0.742],
    [0, -0.099, -0.237, -0.424, -0.652],
    [0, -0.098, -0.223, -0.380, -0.576],
    [0, -0.095, -0.208, -0.346, -0.508],
    [0, -0.090, -0.192, -0.310, -0.447],
    [0, -0.084, -0.173, -0.276, -0.390],
    [0, -0.075, -0.154, -0.241, -0.335],
    [0, -0.066, -0.134, -0.206, -0.283],
    [0, -0.056, -0.111, -0.170, -0.232],
    [0, -0.043, -0.088, -0.132, -0.179],
    [0, -0.030, -0.061, -0.092, -0.123],
    [0, -0.017, -0.032, -0.049, -0.064],
    [0, 0.000, 0.000, 0.000, 0.000],
])

_psi_alpha = RegularGridInterpolator((_NU_ALPHA, _NU_BETA), _ALPHA_TABLE)
_psi_beta = RegularGridInterpolator((_NU_ALPHA, _NU_BETA), _BETA_TABLE)
_phi_c = RegularGridInterpolator((_ALPHA_GRID, _BETA_GRID), _NU_C_TABLE)
_phi_zeta = RegularGridInterpolator((_ALPHA_GRID, _BETA_GRID), _NU_ZETA_TABLE)


def _lookup(interp, x, y, xs, ys):
    point = [[float(np.clip(x, xs[0], xs[-1])), float(np.clip(y, ys[0], ys[-1]))]]
    return float(interp(point)[0])


def estimate_stable(samples):
    """McCulloch quantile estimate of alpha-stable parameters.

    Uses the 5/25/50/75/95 % sample quantiles. ``alpha`` is clamped to
    ``[0.5, 2]`` and ``beta`` to ``[-1, 1]``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < MIN_ESTIMATION_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_ESTIMATION_SAMPLES} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DegenerateSamples("samples contain non-finite values")
    q05, q25, q50, q75, q95 = np.percentile(x, [5, 25, 50, 75, 95])
    if q75 - q25 <= 0 or q95 - q05 <= 0:
        raise DegenerateSamples("interquartile range is zero")

    nu_alpha = (q95 - q05) / (q75 - q25)
    nu_beta = (q95 + q05 - 2 * q50) / (q95 - q05)
    sign = 1.0 if nu_beta >= 0 else -1.0
    if nu_alpha <= _NU_ALPHA[0]:
        alpha, beta = 2.0, 0.0
    else:
        alpha = _lookup(_psi_alpha, nu_alpha, abs(nu_beta), _NU_ALPHA, _NU_BETA)
        beta = sign * _lookup(_psi_beta, nu_alpha, abs(nu_beta), _NU_ALPHA, _NU_BETA)
    alpha = float(np.clip(alpha, 0.5, 2.0))
    beta = float(np.clip(beta, -1.0, 1.0))

    bsign = 1.0 if beta >= 0 else -1.0
    scale = (q75 - q25) / _lookup(_phi_c, alpha, abs(beta), _ALPHA_GRID, _BETA_GRID)
    # McCulloch's zeta is the S0 location
    zeta = q50 + scale * bsign * _lookup(_phi_zeta, alpha, abs(beta), _ALPHA_GRID, _BETA_GRID)
    return StableParams(alpha, beta, float(scale), float(zeta))


def _cms_standard(alpha, beta, v, w):
    """Chambers-Mallows-Stuck transform of V ~ U(-pi/2, pi/2), W ~ Exp(1)."""
    if alpha == 1.0:
        half_pi = math.pi / 2
        return (2 / math.pi) * (
            (half_pi + beta * v) * np.tan(v)
            - beta * np.log((half_pi * w * np.cos(v)) / (half_pi + beta * v))
        )
    t = beta * math.tan(math.pi * alpha / 2)
    b = math.atan(t) / alpha
    s = (1 + t * t) ** (1 / (2 * alpha))
    return (
        s
        * np.sin(alpha * (v + b))
        / np.cos(v) ** (1 / alpha)
        * (np.cos(v - alpha * (v + b)) / w) ** ((1 - alpha) / alpha)
    )


def sample_stable(params, n, seed):
    """Draw ``n`` i.i.d. alpha-stable variates with a private seeded generator."""
    if not isinstance(params, StableParams):
        raise InvalidParams("params must be a StableParams")
    n = int(n)
    if n < 1:
        raise InvalidParams(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    v = rng.uniform(-math.pi / 2, math.pi / 2, size=n)
    w = rng.exponential(1.0, size=n)
    if params.scale == 0:
        return np.full(n, params.location)
    alpha, beta, scale = params.alpha, params.beta, params.scale
    z = _cms_standard(alpha, beta, v, w)
    # standard S1 draw -> S0(alpha, beta, scale, location)
    if alpha == 1.0:
        return scale * z + params.location
    return scale * (z - beta * math.tan(math.pi * alpha / 2)) + params.location


def kolmogorov_sf(x, terms=100):
    """Survival function of the limiting Kolmogorov distribution."""
    if x <= 0:
        return 1.0
    if x < 0.2:
        # series converges poorly here; the value is 1 to double precision
        return 1.0
    k = np.arange(1, terms + 1)
    total = 2 * np.sum((-1.0) ** (k - 1) * np.exp(-2 * k**2 * x * x))
    return float(min(max(total, 0.0), 1.0))


def ks_test(samples, reference_cdf):
    """One-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < MIN_KS_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_KS_SAMPLES} samples, got {n}")
    cdf = np.asarray(reference_cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf)
    d_minus = np.max(cdf - (i - 1) / n)
    d = float(min(max(d_plus, d_minus, 0.0), 1.0))
    return GofResult(d, kolmogorov_sf(math.sqrt(n) * d), n)


def fill_sparse_day(day_bars, global_params, day_observations, seed):
    """Draw tweet means for the empty hours of one sparse day.

    Empty bars receive draws from ``global_params`` relocated to the
    volume-weighted mean of ``day_observations`` and are flagged ``filled``.
    Bars that already carry a tweet mean are returned unchanged.
    """
    if not day_observations:
        raise NoObservationsForDay("a day without observations cannot be filled")
    empty = [i for i, b in enumerate(day_bars) if b.tweet_count == 0 and b.tweet_mean is None]
    if not empty:
        return list(day_bars)
    params = replace(global_params, location=volume_weighted_mean(day_observations))
    draws = sample_stable(params, len(empty), seed)
    out = list(day_bars)
    for i, value in zip(empty, draws):
        out[i] = replace(out[i], tweet_mean=float(value), filled=True)
    return out


def _day_key(bar: HourlyBar):
    return bar.hour_start.date()


def sparse_days(bars, threshold=DEFAULT_SPARSE_THRESHOLD):
    """Dates with fewer than ``threshold`` hours holding at least one quote."""
    populated = defaultdict(int)
    for b in bars:
        populated[_day_key(b)] += 0
        if b.tweet_count >= 1:
            populated[_day_key(b)] += 1
    return sorted(day for day, count in populated.items() if count < threshold)


def fill_bar_gaps(bars, observations, threshold=DEFAULT_SPARSE_THRESHOLD, seed=0):
    """Complete the tweet-mean channel of a whole bar series.

    Sparse days are filled from an alpha-stable law whose shape is estimated
    on the day-demeaned hourly tweet means of the other days. Days with no
    quotes at all are dropped. Isolated empty hours on regular days carry the
    previous hour's tweet mean forward (or the next one at the series start).

    Returns
    -------
    bars : list of HourlyBar
    info : dict
        ``sparse_days``, ``dropped_days`` and the fitted ``params`` (or None).
    """
    bars = list(bars)
    sparse = set(sparse_days(bars, threshold))
    obs_by_day = defaultdict(list)
    for o in observations:
        obs_by_day[o.timestamp.date()].append(o)

    by_day = defaultdict(list)
    for b in bars:
        by_day[_day_key(b)].append(b)

    residuals = []
    for day, day_bars in by_day.items():
        if day in sparse:
            continue
        means = np.array([b.tweet_mean for b in day_bars if b.tweet_mean is not None])
        if means.size:
            residuals.extend(means - means.mean())

    params = None
    dropped = []
    out = []
    for day in sorted(by_day):
        day_bars = by_day[day]
        if day in sparse:
            if not obs_by_day.get(day):
                dropped.append(day)
                continue
            if params is None:
                params = estimate_stable(residuals)
            day_seed = np.random.SeedSequence([int(seed), day.toordinal()])
            day_bars = fill_sparse_day(day_bars, params, obs_by_day[day], day_seed)
        out.extend(day_bars)

    last = next((b.tweet_mean for b in out if b.tweet_mean is not None), None)
    for i, b in enumerate(out):
        if b.tweet_mean is None:
            if last is None:
                continue
            out[i] = replace(b, tweet_mean=last, filled=True)
        else:
            last = b.tweet_mean
    return out, {
        "sparse_days": [d.isoformat() for d in sorted(sparse)],
        "dropped_days": [d.isoformat() for d in dropped],
        "params": None if params is None else asdict(params),
    }
