"""JSON round-trip of fitted forecasters."""

from __future__ import annotations

import json

from ..exceptions import ValidationError
from .ann import AnnModel, ANNRegressor
from .base import PersistenceForecaster
from .linear import ARXRegressor, LinearModel
from .series import ModelOrder


def estimator_to_dict(est, kind, **meta):
    """Serializable description of a fitted estimator plus free-form ``meta``."""
    if isinstance(est, ARXRegressor):
        body = est.model_.to_dict()
    elif isinstance(est, ANNRegressor):
        body = est.model_.to_dict()
        body["hyper"] = {"hidden": est.hidden, "epochs": est.epochs,
                         "learning_rate": est.learning_rate}
    elif isinstance(est, PersistenceForecaster):
        body = {"order": est.order_.as_dict()}
    else:
        raise ValidationError(f"cannot serialize {type(est).__name__}")
    return {"kind": kind, **meta, "model": body}


def estimator_from_dict(d):
    kind = d["kind"]
    body = d["model"]
    order = ModelOrder(**body["order"])
    if kind in ("ar", "arx"):
        est = ARXRegressor(order.n_a, order.n_b, order.n_k)
        est.model_ = LinearModel.from_dict(body)
        est.coef_ = est.model_.coef
        est.coef_std_ = est.model_.coeff_std
    elif kind == "ann":
        model = AnnModel.from_dict(body)
        hyper = body.get("hyper", {})
        est = ANNRegressor(order.n_a, order.n_b, order.n_k, random_state=model.seed, **hyper)
        est.model_ = model
    elif kind in ("rw", "persistence"):
        est = PersistenceForecaster(order.n_k)
    else:
        raise ValidationError(f"unknown model kind {kind!r}")
    est.order_ = order
    return est


def dumps(d):
    return json.dumps(d, indent=2, sort_keys=True) + "\n"
