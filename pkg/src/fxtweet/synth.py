"""Seeded synthetic close/quote series with a tunable exogenous signal.

The close follows ``y(t+1) = y(t) + trend + kappa * (u(t) - y(t)) + eps(t)``,
where the quote mean ``u(t)`` is a noisy preview of the noise-free next close,
``u(t) = y(t) + trend + kappa * (u(t) - y(t)) + eta(t)``. Solving the preview
for ``u`` gives ``u(t) - y(t) = (trend + eta(t)) / (1 - kappa)``, so the
predictable part of each move has standard deviation
``kappa / (1 - kappa) * exo_noise``. With ``kappa = 0`` the quotes carry no
information about future closes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .distfit import StableParams, sample_stable
from .exceptions import InvalidSpec
from .ingest import HourlyBar, hours_between
from .models.series import AT_LEVEL, AlignedSeries

START_RATE = 1.35
START_HOUR = datetime(2010, 10, 25, tzinfo=timezone.utc)


@dataclass(frozen=True)
class SynthSpec:
    """Synthetic series settings.

    ``step_sigma`` is the innovation standard deviation when
    ``tail_alpha = 2``; heavier tails keep the same stable scale
    ``step_sigma / sqrt(2)``. ``exo_noise=None`` means ``0.2 * step_sigma``.
    """

    n_hours: int = 2000
    step_sigma: float = 0.0019
    kappa: float = 0.0
    exo_noise: float | None = None
    trend: float = 0.0
    tail_alpha: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if int(self.n_hours) != self.n_hours or self.n_hours < 2:
            raise InvalidSpec(f"n_hours must be an integer >= 2, got {self.n_hours}")
        if not self.step_sigma >= 0:
            raise InvalidSpec("step_sigma must be non-negative")
        if not 0 <= self.kappa < 1:
            raise InvalidSpec(f"kappa must lie in [0, 1), got {self.kappa}")
        if self.exo_noise is not None and not self.exo_noise >= 0:
            raise InvalidSpec("exo_noise must be non-negative")
        if not 0 < self.tail_alpha <= 2:
            raise InvalidSpec(f"tail_alpha must lie in (0, 2], got {self.tail_alpha}")

    @property
    def exo_sigma(self):
        return 0.2 * self.step_sigma if self.exo_noise is None else self.exo_noise


def generate_synthetic(spec):
    """Return an at-level :class:`AlignedSeries` of closes ``y`` and quotes ``u``."""
    eps_seed, eta_seed = np.random.SeedSequence(int(spec.seed)).spawn(2)
    n = int(spec.n_hours)
    if spec.step_sigma > 0:
        params = StableParams(spec.tail_alpha, 0.0, spec.step_sigma / math.sqrt(2), 0.0)
        eps = sample_stable(params, n - 1, eps_seed)
    else:
        eps = np.zeros(n - 1)
    eta = np.random.default_rng(eta_seed).normal(0.0, 1.0, size=n) * spec.exo_sigma
    gap = (spec.trend + eta) / (1.0 - spec.kappa)
    steps = spec.trend + spec.kappa * gap[:-1] + eps
    y = START_RATE + np.concatenate([[0.0], np.cumsum(steps)])
    u = y + gap
    if np.any(y <= 0) or np.any(u <= 0):
        raise InvalidSpec("spec drives rates non-positive; lower step_sigma or n_hours")
    return AlignedSeries(y, u, AT_LEVEL)


def series_to_bars(series, start=START_HOUR):
    hours = hours_between(start, len(series))
    return [HourlyBar(h, float(y), float(u), 1, False) for h, y, u in zip(hours, series.y, series.u)]
