"""Forecasting models: lag structures, least-squares AR/ARX and the feedforward network."""

from .ann import (
    AnnModel,
    ANNRegressor,
    BaumHausslerWarning,
    activation,
    ann_gradient,
    ann_loss,
    baum_haussler_check,
    count_weights,
    init_ann,
    predict_ann,
    train_ann,
)
from .base import LagForecasterMixin, PersistenceForecaster
from .linear import POLYNOMIAL, REGRESSION, ARXRegressor, LinearModel, fit_linear, predict_linear
from .series import (
    AT_LEVEL,
    LOG_RETURN,
    AlignedSeries,
    ModelOrder,
    build_lag_matrix,
    lag_row,
    log_returns,
)

__all__ = [
    "AT_LEVEL",
    "LOG_RETURN",
    "POLYNOMIAL",
    "REGRESSION",
    "AlignedSeries",
    "AnnModel",
    "ANNRegressor",
    "ARXRegressor",
    "BaumHausslerWarning",
    "LagForecasterMixin",
    "LinearModel",
    "ModelOrder",
    "PersistenceForecaster",
    "activation",
    "ann_gradient",
    "ann_loss",
    "baum_haussler_check",
    "build_lag_matrix",
    "count_weights",
    "fit_linear",
    "init_ann",
    "lag_row",
    "log_returns",
    "predict_ann",
    "predict_linear",
    "train_ann",
]
