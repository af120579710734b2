"""Command-line entry point.

Subcommands: ``synth``, ``ingest``, ``fit``, ``sweep``, ``trade``, ``signif``.
Settings resolve as command-line flags, then ``--config`` JSON keys (dash or
underscore spelling), then built-in defaults. Exit status is 0 on success,
1 on invalid configuration and 2 on unusable input data.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .distfit import fill_bar_gaps
from .evaluation import (
    SplitSpec,
    forecast_block,
    make_estimator,
    metrics_from_block,
    select_order,
    sweep,
)
from .exceptions import DataError, FxTweetError, ValidationError
from .ingest import (
    PlausibilityBand,
    build_hourly_bars,
    format_bars,
    load_closes,
    load_messages,
    normalize_messages,
    read_bars,
)
from .models import AT_LEVEL, LOG_RETURN, AlignedSeries, log_returns
from .models.io import dumps, estimator_from_dict, estimator_to_dict
from .stats import accuracy_difference_test, bootstrap_statistic, permutation_null
from .synth import SynthSpec, generate_synthetic, series_to_bars
from .trading import TradingConfig, grid_csv, mean_cumulative_grid, simulate

logger = logging.getLogger("fxtweet")

REPRESENTATIONS = {"level": AT_LEVEL, "returns": LOG_RETURN}

DEFAULTS = {
    "messages": None,
    "closes": None,
    "bars": None,
    "model": None,
    "out_dir": ".",
    "kind": "arx",
    "na_range": "1:10",
    "nb_range": "1:10",
    "na": None,
    "nb": None,
    "nk": "1",
    "representation": "level",
    "split": 0.6,
    "m": 4,
    "epochs": 100,
    "lr": 0.05,
    "hidden": 4,
    "ann_seeds": 3,
    "seed": 0,
    "sparse_threshold": 4,
    "literal_ma": False,
    "boot": 5000,
    "band": "1.0:1.6",
    "hours": 2000,
    "kappa": 0.0,
    "step_sigma": 0.0019,
    "exo_noise": None,
    "trend": 0.0,
    "tail_alpha": 2.0,
    "jobs": None,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add(p, *names):
    table = {
        "messages": dict(help="messages CSV: timestamp,author,price_token,volume"),
        "closes": dict(help="closes CSV: hour,close"),
        "bars": dict(help="bar CSV (default: <out-dir>/bars.csv)"),
        "model": dict(help="model JSON written by 'fit'"),
        "kind": dict(choices=["ar", "arx", "ann"]),
        "na_range": dict(metavar="A:B"),
        "nb_range": dict(metavar="A:B"),
        "na": dict(type=int),
        "nb": dict(type=int),
        "nk": dict(metavar="N[,N...]"),
        "representation": dict(choices=sorted(REPRESENTATIONS)),
        "split": dict(type=float),
        "m": dict(type=int),
        "epochs": dict(type=int),
        "lr": dict(type=float),
        "hidden": dict(type=int),
        "ann_seeds": dict(type=int, help="initializations averaged per ANN cell"),
        "sparse_threshold": dict(type=int),
        "literal_ma": dict(action="store_const", const=True,
                           help="moving average ending at the traded hour"),
        "boot": dict(type=int, help="resamples for significance tests"),
        "band": dict(metavar="LO:HI", help="plausible rate band for price tokens"),
        "hours": dict(type=int),
        "kappa": dict(type=float),
        "step_sigma": dict(type=float),
        "exo_noise": dict(type=float),
        "trend": dict(type=float),
        "tail_alpha": dict(type=float),
        "jobs": dict(type=int, help="parallel workers for sweeps"),
    }
    for name in names:
        p.add_argument("--" + name.replace("_", "-"), dest=name, default=None, **table[name])


def build_parser():
    parser = _Parser(prog="fxtweet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys mirror the flags")
    common.add_argument("--out-dir", dest="out_dir", default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="write synthetic bars")
    _add(p, "hours", "kappa", "step_sigma", "exo_noise", "trend", "tail_alpha")

    p = sub.add_parser("ingest", parents=[common], help="messages and closes to bars")
    _add(p, "messages", "closes", "band", "sparse_threshold")

    p = sub.add_parser("fit", parents=[common], help="fit one model order")
    _add(p, "bars", "kind", "na", "nb", "nk", "na_range", "nb_range", "representation", "split",
         "epochs", "lr", "hidden")

    p = sub.add_parser("sweep", parents=[common], help="metric grids over model orders")
    _add(p, "bars", "kind", "na_range", "nb_range", "nk", "representation", "split", "m",
         "epochs", "lr", "hidden", "ann_seeds", "literal_ma", "jobs")

    p = sub.add_parser("trade", parents=[common], help="trading ledger for one model")
    _add(p, "bars", "model", "kind", "na", "nb", "nk", "na_range", "nb_range", "split", "m",
         "epochs", "lr", "hidden", "literal_ma")

    p = sub.add_parser("signif", parents=[common], help="resampling tests for one model")
    _add(p, "bars", "model", "kind", "na", "nb", "nk", "na_range", "nb_range", "representation",
         "split", "epochs", "lr", "hidden", "boot")
    return parser


def resolve(args):
    """Merge flags over the JSON config over :data:`DEFAULTS`."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{args.config}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(loaded, dict):
            raise ValidationError(f"{args.config}: config must be a JSON object")
        for key, value in loaded.items():
            name = key.replace("-", "_")
            if name not in cfg:
                raise ValidationError(f"{args.config}: unknown config key {key!r}")
            cfg[name] = value
    for name, value in vars(args).items():
        if value is not None and name in cfg:
            cfg[name] = value
    cfg["command"] = args.command
    return cfg


def parse_range(text, name):
    try:
        lo, hi = (int(v) for v in str(text).split(":"))
    except ValueError:
        raise ValidationError(f"--{name} expects A:B with integers, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise ValidationError(f"--{name} needs 1 <= A <= B, got {text!r}")
    return range(lo, hi + 1)


def parse_nk(value):
    items = value if isinstance(value, list) else str(value).split(",")
    try:
        out = [int(v) for v in items]
    except ValueError:
        raise ValidationError(f"--nk expects N[,N...], got {value!r}") from None
    if not out or any(v < 1 for v in out):
        raise ValidationError("--nk values must be positive")
    return out


def parse_band(text):
    try:
        lo, hi = (float(v) for v in str(text).split(":"))
    except ValueError:
        raise ValidationError(f"--band expects LO:HI, got {text!r}") from None
    return PlausibilityBand(lo, hi)


def _representation(cfg):
    rep = cfg["representation"]
    if rep not in REPRESENTATIONS:
        raise ValidationError(f"representation must be one of {sorted(REPRESENTATIONS)}")
    return REPRESENTATIONS[rep]


def _ann_params(cfg):
    return {"epochs": int(cfg["epochs"]), "learning_rate": float(cfg["lr"]),
            "hidden": int(cfg["hidden"])}


def validate(cfg):
    """Reject bad settings before any input is read."""
    try:
        _validate(cfg)
    except ValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"invalid setting: {exc}") from exc


def _validate(cfg):
    parse_range(cfg["na_range"], "na-range")
    parse_range(cfg["nb_range"], "nb-range")
    parse_nk(cfg["nk"])
    parse_band(cfg["band"])
    _representation(cfg)
    if cfg["kind"] not in ("ar", "arx", "ann"):
        raise ValidationError(f"kind must be ar, arx or ann, got {cfg['kind']!r}")
    if not 0 < float(cfg["split"]) < 1:
        raise ValidationError(f"split must lie in (0, 1), got {cfg['split']}")
    for name, low in (("m", 1), ("epochs", 0), ("hidden", 1), ("ann_seeds", 1),
                      ("sparse_threshold", 1), ("boot", 100), ("hours", 2)):
        if int(cfg[name]) != cfg[name] or cfg[name] < low:
            raise ValidationError(f"{name.replace('_', '-')} must be an integer >= {low}")
    if not float(cfg["lr"]) > 0:
        raise ValidationError("lr must be positive")
    for name in ("na", "nb"):
        if cfg[name] is not None and (int(cfg[name]) != cfg[name] or cfg[name] < (name == "na")):
            raise ValidationError(f"{name} must be a non-negative integer")


class Outputs:
    """Atomic file writer that removes everything it wrote if the run fails."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.written = []

    def path(self, name):
        return self.dir / name

    def write(self, name, text):
        self.dir.mkdir(parents=True, exist_ok=True)
        target = self.path(name)
        fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, target)
        except BaseException:
            with contextlib.suppress(OSError):
                os.unlink(tmp)
            raise
        self.written.append(target)
        return target

    def write_bars(self, name, bars):
        return self.write(name, format_bars(bars))

    def rollback(self):
        for p in self.written:
            with contextlib.suppress(OSError):
                p.unlink()
        self.written.clear()


def load_series(cfg, kind=None):
    """Bars on disk as an :class:`AlignedSeries` in the configured representation."""
    path = cfg["bars"] or str(Path(cfg["out_dir"]) / "bars.csv")
    bars = read_bars(path)
    if not bars:
        raise DataError(f"{path}: no bars")
    y = np.array([b.close for b in bars])
    u = None
    if kind != "ar":
        missing = [b.hour_start.isoformat() for b in bars if b.tweet_mean is None]
        if missing:
            raise DataError(f"{path}: {len(missing)} bar(s) without a tweet mean, first at {missing[0]}")
        u = np.array([b.tweet_mean for b in bars])
    series = AlignedSeries(y, u, AT_LEVEL)
    if _representation(cfg) == LOG_RETURN:
        series = log_returns(series)
    return series


def _cmd_synth(cfg, out):
    spec = SynthSpec(
        n_hours=int(cfg["hours"]),
        step_sigma=float(cfg["step_sigma"]),
        kappa=float(cfg["kappa"]),
        exo_noise=None if cfg["exo_noise"] is None else float(cfg["exo_noise"]),
        trend=float(cfg["trend"]),
        tail_alpha=float(cfg["tail_alpha"]),
        seed=int(cfg["seed"]),
    )
    out.write_bars("bars.csv", series_to_bars(generate_synthetic(spec)))


def _cmd_ingest(cfg, out):
    if not cfg["messages"] or not cfg["closes"]:
        raise ValidationError("ingest needs --messages and --closes")
    band = parse_band(cfg["band"])
    messages = load_messages(cfg["messages"])
    closes = load_closes(cfg["closes"])
    bars, report = build_hourly_bars(messages, closes, band, return_report=True)
    observations, _ = normalize_messages(messages, band)
    bars, info = fill_bar_gaps(bars, observations, int(cfg["sparse_threshold"]), int(cfg["seed"]))
    report["sparse_days"] = info["sparse_days"]
    report["dropped_days"] = info["dropped_days"]
    report["stable_params"] = info["params"]
    report["bars_written"] = len(bars)
    out.write_bars("bars.csv", bars)
    out.write("ingest_report.json", dumps(report))


def _fit_one(cfg, series, n_k):
    """Fit ``--na/--nb`` or, when absent, the order chosen on a training hold-out."""
    kind = cfg["kind"]
    spec = SplitSpec(float(cfg["split"]))
    params = _ann_params(cfg)
    n_b = 0 if kind == "ar" else cfg["nb"]
    if cfg["na"] is not None and (n_b is not None):
        n_a, chosen = int(cfg["na"]), "flags"
    else:
        n_a, n_b = select_order(series, kind, parse_range(cfg["na_range"], "na-range"),
                                parse_range(cfg["nb_range"], "nb-range"), n_k, spec,
                                random_state=int(cfg["seed"]), n_seeds=1, **params)
        chosen = "inner_holdout"
    est = make_estimator(kind, n_a, int(n_b), n_k, random_state=int(cfg["seed"]), **params)
    start = spec.train_size(len(series))
    est.fit(series.y[:start], None if series.u is None else series.u[:start])
    return est, start, chosen


def _single_nk(cfg):
    nks = parse_nk(cfg["nk"])
    if len(nks) != 1:
        raise ValidationError(f"{cfg['command']} takes a single --nk value")
    return nks[0]


def _load_or_fit(cfg):
    if cfg["model"]:
        with open(cfg["model"]) as fh:
            doc = json.load(fh)
        cfg = {**cfg, "representation": doc["representation"], "split": doc["split"],
               "kind": doc["kind"]}
        series = load_series(cfg, cfg["kind"])
        est = estimator_from_dict(doc)
        start = SplitSpec(float(cfg["split"])).train_size(len(series))
        return est, series, start, cfg
    series = load_series(cfg, cfg["kind"])
    est, start, _ = _fit_one(cfg, series, _single_nk(cfg))
    return est, series, start, cfg


def _cmd_fit(cfg, out):
    n_k = _single_nk(cfg)
    series = load_series(cfg, cfg["kind"])
    est, start, chosen = _fit_one(cfg, series, n_k)
    metrics = metrics_from_block(forecast_block(est, series, start))
    doc = estimator_to_dict(est, cfg["kind"], representation=cfg["representation"],
                            split=float(cfg["split"]), order_source=chosen,
                            test_metrics=metrics.as_dict())
    out.write("model.json", dumps(doc))


def _cmd_sweep(cfg, out):
    kind = cfg["kind"]
    series = load_series(cfg, kind)
    spec = SplitSpec(float(cfg["split"]))
    na_range = parse_range(cfg["na_range"], "na-range")
    nb_range = parse_range(cfg["nb_range"], "nb-range")
    params = _ann_params(cfg)
    n_seeds = int(cfg["ann_seeds"])
    for n_k in parse_nk(cfg["nk"]):
        grid = sweep(series, kind, na_range, nb_range, n_k, spec, n_seeds=n_seeds,
                     random_state=int(cfg["seed"]), n_jobs=cfg["jobs"], **params)
        stem = f"sweep_{kind}_nk{n_k}"
        doc = grid.to_dict()
        doc["selected_inner_holdout"] = list(select_order(
            series, kind, na_range, nb_range, n_k, spec, n_seeds=n_seeds,
            random_state=int(cfg["seed"]), n_jobs=cfg["jobs"], **params))
        if series.representation == AT_LEVEL and grid.cells:
            config = TradingConfig(m=int(cfg["m"]), n_k=n_k, literal_ma=bool(cfg["literal_ma"]))
            cum = mean_cumulative_grid(grid.predictions, series.y, config,
                                       grid.n_a_values, grid.n_b_values)
            out.write(f"{stem}_cumulative_return.csv",
                      grid_csv(cum, grid.n_a_values, grid.n_b_values))
        for metric in ("rmse", "mae", "directional", "error_variance"):
            out.write(f"{stem}_{metric}.csv", grid.matrix_csv(metric))
        out.write(f"{stem}.json", dumps(doc))


def _cmd_trade(cfg, out):
    cfg = {**cfg, "representation": "level"} if not cfg["model"] else cfg
    est, series, start, cfg = _load_or_fit(cfg)
    if series.representation != AT_LEVEL:
        raise ValidationError("trading needs an at-level model")
    preds = np.full(len(series), np.nan)
    preds[start:] = forecast_block(est, series, start).predictions
    config = TradingConfig(m=int(cfg["m"]), n_k=est.order_.n_k,
                           literal_ma=bool(cfg["literal_ma"]))
    out.write("ledger.csv", simulate(preds, series.y, config).to_csv())


def _cmd_signif(cfg, out):
    est, series, start, cfg = _load_or_fit(cfg)
    block = forecast_block(est, series, start)
    seed, B = int(cfg["seed"]), int(cfg["boot"])
    perm = permutation_null(block.predicted_signs(), block.actual_signs(), B, seed)
    boot = bootstrap_statistic(block.hits(), B, seed)
    rw = make_estimator("rw", 1, 0, est.order_.n_k).fit(series.y[:start])
    rw_block = forecast_block(rw, series, start)
    diff = accuracy_difference_test(block.predictions - block.actuals,
                                    rw_block.predictions - block.actuals, B, seed)
    doc = {
        "model": {"kind": cfg["kind"], "n_a": est.order_.n_a, "n_b": est.order_.n_b,
                  "n_k": est.order_.n_k, "representation": cfg["representation"]},
        "test_points": int(block.actuals.size),
        "permutation": perm.to_dict(),
        "bootstrap": boot.to_dict(),
        "abs_error_vs_random_walk": diff.to_dict(),
    }
    out.write("signif.json", dumps(doc))


COMMANDS = {
    "synth": _cmd_synth,
    "ingest": _cmd_ingest,
    "fit": _cmd_fit,
    "sweep": _cmd_sweep,
    "trade": _cmd_trade,
    "signif": _cmd_signif,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = None
    try:
        cfg = resolve(args)
        validate(cfg)
        out = Outputs(cfg["out_dir"])
        COMMANDS[args.command](cfg, out)
    except ValidationError as exc:
        if out is not None:
            out.rollback()
        print(f"fxtweet {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError, KeyError, json.JSONDecodeError) as exc:
        if out is not None:
            out.rollback()
        print(f"fxtweet {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except FxTweetError as exc:
        if out is not None:
            out.rollback()
        print(f"fxtweet {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except BaseException:
        if out is not None:
            out.rollback()
        raise
    return 0


if __name__ == "__main__":
    sys.exit(main())
