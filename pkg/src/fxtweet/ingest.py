"""Quote-message ingestion and hourly bar construction.

Messages carry a free-form target price (``"1.345"``, ``"13,45"``, ...) that
is read as a digit string and placed by a power of ten into a plausibility
band. Each hour's quotes posted between minute 01 and minute 50 are reduced
to a volume-weighted mean and aligned with that hour's actual close.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from decimal import Decimal
from pathlib import Path
from typing import Iterable

from .exceptions import (
    AllTokensUnparseable,
    Ambiguous,
    EmptyInput,
    MalformedRow,
    MissingColumn,
    NonMonotonicCloses,
    NoPlacement,
    NotNumeric,
    ValidationError,
)

logger = logging.getLogger(__name__)

__all__ = [
    "RawMessage",
    "QuoteObservation",
    "HourlyBar",
    "PlausibilityBand",
    "DEFAULT_BAND",
    "normalize_price_token",
    "window_filter",
    "volume_weighted_mean",
    "build_hourly_bars",
    "normalize_messages",
    "load_messages",
    "load_closes",
    "read_bars",
    "format_bars",
    "write_bars",
    "parse_timestamp",
]

WINDOW_START_MINUTE = 1
WINDOW_END_MINUTE = 51  # exclusive

MESSAGE_COLUMNS = ("timestamp", "author", "price_token", "volume")
CLOSE_COLUMNS = ("hour", "close")
BAR_COLUMNS = ("hour", "close", "tweet_mean", "tweet_count", "filled")


@dataclass(frozen=True)
class PlausibilityBand:
    low: float
    high: float

    def __post_init__(self):
        if not (0 < self.low < self.high):
            raise ValidationError(f"invalid band [{self.low}, {self.high}]")


DEFAULT_BAND = PlausibilityBand(1.0, 1.6)


@dataclass(frozen=True)
class RawMessage:
    timestamp: datetime
    author: str
    price_token: str
    volume: float = 1.0

    def __post_init__(self):
        if not self.price_token:
            raise ValidationError("price_token must be non-empty")


@dataclass(frozen=True)
class QuoteObservation:
    timestamp: datetime
    rate: float
    volume: float = 1.0

    def __post_init__(self):
        if not self.volume > 0:
            raise ValidationError(f"volume must be positive, got {self.volume}")


@dataclass(frozen=True)
class HourlyBar:
    hour_start: datetime
    close: float
    tweet_mean: float | None = None
    tweet_count: int = 0
    filled: bool = False

    @property
    def pending(self):
        """True when the bar still needs a gap-filled tweet mean."""
        return self.tweet_mean is None


def parse_timestamp(text):
    """Parse an ISO-8601 instant; naive values are taken as UTC."""
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _format_timestamp(ts):
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _hour_floor(ts):
    return ts.replace(minute=0, second=0, microsecond=0)


def normalize_price_token(token, band=DEFAULT_BAND):
    """Read ``token`` as a digit string and place it inside ``band``.

    All non-digit characters are dropped, so ``"1.345"``, ``"1,345"``,
    ``"13,45"`` and ``"134.5"`` share the digit string ``1345``. The result
    is the unique ``int(digits) * 10**k`` lying in ``[band.low, band.high]``.

    Raises
    ------
    NotNumeric
        The token holds no digits.
    NoPlacement
        No power-of-ten placement lands in the band.
    Ambiguous
        More than one placement lands in the band.
    """
    digits = "".join(ch for ch in str(token) if ch.isdigit())
    if not digits:
        raise NotNumeric(f"no digits in token {token!r}")
    mantissa = Decimal(int(digits))
    if mantissa == 0:
        raise NoPlacement(f"token {token!r} is zero")
    low = Decimal(repr(float(band.low)))
    high = Decimal(repr(float(band.high)))
    # candidate exponents bracket log10(low / mantissa) .. log10(high / mantissa)
    k_min = math.floor(math.log10(band.low) - math.log10(mantissa)) - 1
    k_max = math.ceil(math.log10(band.high) - math.log10(mantissa)) + 1
    hits = [
        mantissa.scaleb(k)
        for k in range(k_min, k_max + 1)
        if low <= mantissa.scaleb(k) <= high
    ]
    if not hits:
        raise NoPlacement(f"no placement of {token!r} in [{band.low}, {band.high}]")
    if len(hits) > 1:
        raise Ambiguous(f"{token!r} has {len(hits)} placements in [{band.low}, {band.high}]")
    return float(hits[0])


def window_filter(observations, hour_start=None):
    """Keep observations posted from minute 01 through minute 50 of the hour.

    When ``hour_start`` is given, observations outside that hour are dropped
    as well.
    """
    out = []
    for obs in observations:
        if hour_start is not None and _hour_floor(obs.timestamp) != hour_start:
            continue
        if WINDOW_START_MINUTE <= obs.timestamp.minute < WINDOW_END_MINUTE:
            out.append(obs)
    return out


def volume_weighted_mean(observations):
    if not observations:
        raise EmptyInput("volume_weighted_mean needs at least one observation")
    total = math.fsum(o.volume for o in observations)
    mean = math.fsum(o.rate * o.volume for o in observations) / total
    # guard against round-off escaping the convex hull
    lo = min(o.rate for o in observations)
    hi = max(o.rate for o in observations)
    return min(max(mean, lo), hi)


def normalize_messages(messages, band=DEFAULT_BAND):
    """Exact-duplicate-free quote observations and the count of skipped tokens.

    Raises AllTokensUnparseable when messages exist but none parses.
    """
    unique = list(dict.fromkeys(messages))
    observations = []
    skipped = 0
    for msg in unique:
        try:
            rate = normalize_price_token(msg.price_token, band)
        except (NotNumeric, NoPlacement, Ambiguous):
            skipped += 1
            continue
        observations.append(QuoteObservation(msg.timestamp, rate, msg.volume))
    if unique and skipped == len(unique):
        raise AllTokensUnparseable(f"all {skipped} price tokens failed to parse")
    if skipped:
        logger.warning("skipped %d unparseable price tokens of %d", skipped, len(unique))
    return observations, skipped


def build_hourly_bars(messages, closes, band=DEFAULT_BAND, return_report=False):
    """Align windowed tweet means with hourly closes.

    Parameters
    ----------
    messages : iterable of RawMessage
    closes : sequence of (datetime, float)
        Strictly hour-increasing actual closes; one bar is produced per entry.
    band : PlausibilityBand
    return_report : bool, default=False
        If True, also return a dict with parse counts.

    Returns
    -------
    bars : list of HourlyBar
        Bars without windowed quotes have ``tweet_mean=None`` pending gap fill.
    """
    closes = [(_hour_floor(h), float(c)) for h, c in closes]
    for (h0, _), (h1, _) in zip(closes, closes[1:]):
        if not h1 > h0:
            raise NonMonotonicCloses(f"close hours not increasing at {_format_timestamp(h1)}")

    messages = list(messages)
    observations, skipped = normalize_messages(messages, band)
    n_unique = len(observations) + skipped
    by_hour = defaultdict(list)
    for obs in observations:
        by_hour[_hour_floor(obs.timestamp)].append(obs)

    bars = []
    for hour, close in closes:
        window = window_filter(by_hour.get(hour, ()), hour)
        mean = volume_weighted_mean(window) if window else None
        bars.append(HourlyBar(hour, close, mean, len(window), False))

    if return_report:
        report = {
            "messages": n_unique,
            "duplicates_removed": len(messages) - n_unique,
            "unparseable": skipped,
            "bars": len(bars),
            "pending": sum(b.pending for b in bars),
        }
        return bars, report
    return bars


def _read_rows(path, required):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MissingColumn(f"{path}: empty file, expected header {','.join(required)}")
        missing = [c for c in required if c not in header]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")
        index = {name: header.index(name) for name in required}
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                row = row + [""] * (len(header) - len(row))
            yield reader.line_num, {name: row[i].strip() for name, i in index.items()}


def load_messages(path):
    """Read a ``timestamp,author,price_token,volume`` file."""
    out = []
    for line, row in _read_rows(path, MESSAGE_COLUMNS):
        try:
            ts = parse_timestamp(row["timestamp"])
            volume = float(row["volume"]) if row["volume"] else 1.0
            if not volume > 0:
                raise ValueError(f"volume must be positive, got {row['volume']!r}")
            out.append(RawMessage(ts, row["author"], row["price_token"], volume))
        except ValueError as exc:
            raise MalformedRow(line, str(exc), path) from exc
    return out


def load_closes(path):
    """Read an ``hour,close`` file into ``[(datetime, float), ...]``."""
    out = []
    for line, row in _read_rows(path, CLOSE_COLUMNS):
        try:
            hour = parse_timestamp(row["hour"])
            close = float(row["close"])
            if not close > 0:
                raise ValueError(f"close must be positive, got {row['close']!r}")
        except ValueError as exc:
            raise MalformedRow(line, str(exc), path) from exc
        out.append((hour, close))
    return out


def format_bars(bars: Iterable[HourlyBar]):
    """Bar file contents as text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BAR_COLUMNS)
    for b in bars:
        writer.writerow([
            _format_timestamp(b.hour_start),
            repr(float(b.close)),
            "" if b.tweet_mean is None else repr(float(b.tweet_mean)),
            b.tweet_count,
            int(b.filled),
        ])
    return buf.getvalue()


def write_bars(path, bars: Iterable[HourlyBar]):
    Path(path).write_text(format_bars(bars))


def read_bars(path):
    bars = []
    for line, row in _read_rows(path, BAR_COLUMNS):
        try:
            bars.append(HourlyBar(
                parse_timestamp(row["hour"]),
                float(row["close"]),
                float(row["tweet_mean"]) if row["tweet_mean"] else None,
                int(row["tweet_count"]),
                row["filled"].lower() in ("1", "true"),
            ))
        except ValueError as exc:
            raise MalformedRow(line, str(exc), path) from exc
    for a, b in zip(bars, bars[1:]):
        if not b.hour_start > a.hour_start:
            raise NonMonotonicCloses(f"{path}: bar hours not increasing at {_format_timestamp(b.hour_start)}")
    return bars


def hours_between(start, n):
    """``n`` consecutive UTC hour starts beginning at ``start``."""
    start = _hour_floor(start)
    return [start + timedelta(hours=i) for i in range(n)]
