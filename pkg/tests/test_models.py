import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fxtweet.exceptions import (
    DivergedLoss,
    InsufficientHistory,
    MissingExogenous,
    NonPositiveValue,
    RankDeficient,
    ShapeMismatch,
    TooShort,
    ValidationError,
)
from fxtweet.models import (
    AT_LEVEL,
    LOG_RETURN,
    POLYNOMIAL,
    REGRESSION,
    AlignedSeries,
    AnnModel,
    ANNRegressor,
    ARXRegressor,
    BaumHausslerWarning,
    LinearModel,
    ModelOrder,
    PersistenceForecaster,
    activation,
    ann_gradient,
    ann_loss,
    baum_haussler_check,
    build_lag_matrix,
    count_weights,
    fit_linear,
    init_ann,
    lag_row,
    log_returns,
    predict_ann,
    predict_linear,
    train_ann,
)
from fxtweet.models.io import estimator_from_dict, estimator_to_dict

from _oracles import (
    central_difference_gradient,
    max_relative_error,
    noise_free_arx,
    random_gradient_case,
)


def series(y, u=None):
    return AlignedSeries(np.asarray(y, float), None if u is None else np.asarray(u, float))


# series and lags

def test_log_returns_examples():
    assert np.array_equal(log_returns(series([1.0, 1.0, 1.0])).y, [0.0, 0.0])
    assert log_returns(series([1.0, math.exp(0.01)])).y[0] == pytest.approx(1.0, abs=1e-12)
    r = log_returns(series([1.30, 1.313])).y[0]
    assert r == pytest.approx(100 * math.log(1.313 / 1.30), abs=1e-12)
    # the quoted value 0.99502 is a rounded approximation of 0.995033...
    assert r == pytest.approx(0.99502, abs=1e-4)
    assert log_returns(series([1.0, 2.0])).representation == LOG_RETURN


def test_log_returns_errors():
    with pytest.raises(NonPositiveValue):
        log_returns(series([1.0, 0.0]))
    with pytest.raises(TooShort):
        log_returns(series([1.0]))


@given(st.lists(st.floats(0.5, 2.0), min_size=2, max_size=50), st.floats(0.01, 100))
def test_log_returns_scale_invariant(y, c):
    a = log_returns(series(y)).y
    b = log_returns(series(np.asarray(y) * c)).y
    assert np.allclose(a, b, atol=1e-9)


def test_lag_matrix_examples():
    X, t = build_lag_matrix(series([1, 2, 3, 4]), ModelOrder(1, 0, 1))
    assert X.tolist() == [[1], [2], [3]] and t.tolist() == [2, 3, 4]
    X, t = build_lag_matrix(series([1, 2, 3, 4, 5]), ModelOrder(2, 0, 1))
    assert X.tolist() == [[2, 1], [3, 2], [4, 3]] and t.tolist() == [3, 4, 5]
    X, t = build_lag_matrix(series([1, 2, 3, 4], [10, 20, 30, 40]), ModelOrder(1, 1, 2))
    assert X.tolist() == [[1, 10], [2, 20]] and t.tolist() == [3, 4]


def test_lag_matrix_errors():
    with pytest.raises(TooShort):
        build_lag_matrix(series([1, 2]), ModelOrder(2, 0, 1))
    with pytest.raises(MissingExogenous):
        build_lag_matrix(series([1, 2, 3]), ModelOrder(1, 1, 1))
    with pytest.raises(ValidationError):
        ModelOrder(0, 0, 1)


@given(st.integers(1, 4), st.integers(0, 4), st.integers(1, 3), st.integers(12, 30))
def test_lag_rows_agree_with_matrix(n_a, n_b, n_k, n):
    s = series(np.arange(n) * 1.0, 100 + np.arange(n) * 1.0)
    order = ModelOrder(n_a, n_b, n_k)
    X, targets = build_lag_matrix(s, order)
    assert X.shape == (n - order.max_lag, n_a + n_b)
    for r, t in enumerate(range(order.max_lag, n)):
        assert np.array_equal(lag_row(s, order, t), X[r])
        assert targets[r] == s.y[t]


# linear models

def test_recovers_noise_free_coefficients():
    y, u = noise_free_arx(200, [0.5], [0.3])
    model = fit_linear(series(y, u), ModelOrder(1, 1, 1))
    assert np.max(np.abs(model.coef - [0.5, 0.3])) < 1e-8


@pytest.mark.parametrize("a,b,n_k", [([0.6, -0.2], [0.4, 0.1], 1), ([0.9], [0.2, -0.3, 0.1], 2),
                                     ([0.3, 0.2, 0.1], [], 1), ([0.5, 0.1], [1.0], 3)])
def test_exact_recovery_over_orders(a, b, n_k):
    y, u = noise_free_arx(300, a, b, n_k, seed=len(a) + 10 * len(b))
    model = fit_linear(series(y, u), ModelOrder(len(a), len(b), n_k))
    assert np.max(np.abs(model.coef - np.array(a + b))) < 1e-8


def test_random_walk_coefficient():
    y = 1.35 + np.cumsum(np.random.default_rng(0).normal(0, 0.002, 5000))
    est = ARXRegressor(n_a=1).fit(y)
    assert 0.98 <= est.coef_[0] <= 1.02
    assert -1.02 <= est.model_.polynomial_a_coeffs[0] <= -0.98


def test_collinear_design_is_rank_deficient():
    y = np.random.default_rng(0).normal(size=50)
    with pytest.raises(RankDeficient):
        fit_linear(series(y, np.ones(50)), ModelOrder(1, 2, 1))


def test_min_norm_fallback_warns():
    with pytest.warns(RuntimeWarning):
        model = fit_linear(series(np.ones(20)), ModelOrder(2, 0, 1), on_rank_deficient="min_norm")
    assert model.predict_rows([[1.0, 1.0]])[0] == pytest.approx(1.0)


def test_standard_errors_match_normal_equations():
    rng = np.random.default_rng(5)
    u = rng.normal(size=400)
    y = np.zeros(400)
    for t in range(1, 400):
        y[t] = 0.4 * y[t - 1] + 0.7 * u[t - 1] + rng.normal(0, 0.1)
    order = ModelOrder(1, 1, 1)
    model = fit_linear(series(y, u), order)
    X, target = build_lag_matrix(series(y, u), order)
    beta = np.linalg.solve(X.T @ X, X.T @ target)
    resid = target - X @ beta
    sigma2 = resid @ resid / (X.shape[0] - X.shape[1])
    assert np.allclose(model.coef, beta, atol=1e-10)
    assert np.allclose(model.coeff_std, np.sqrt(sigma2 * np.diag(np.linalg.inv(X.T @ X))), rtol=1e-8)


def test_sign_conventions():
    m = LinearModel(ModelOrder(2, 1, 1), [0.9, 0.05], [0.2], [0.1, 0.1, 0.1], REGRESSION, 1.0)
    poly = m.in_convention(POLYNOMIAL)
    assert np.array_equal(poly.a_coeffs, -m.a_coeffs)
    assert np.array_equal(poly.in_convention(REGRESSION).a_coeffs, m.a_coeffs)
    assert np.array_equal(poly.coef, m.coef)


def test_predict_linear_examples():
    rw = LinearModel(ModelOrder(1, 0, 1), [1.0], [], [0.0], REGRESSION, 0.0)
    assert predict_linear(rw, series([1.30, 1.35]), 2) == 1.35
    m = LinearModel(ModelOrder(1, 1, 1), [0.5], [0.3], [0, 0], REGRESSION, 0.0)
    assert predict_linear(m, series([2.0], [1.0]), 1) == pytest.approx(1.3)
    with pytest.raises(InsufficientHistory):
        predict_linear(LinearModel(ModelOrder(3, 0, 1), [1, 0, 0], [], [0] * 3, REGRESSION, 0),
                       series([1.0, 1.0]), 2)


def test_linear_json_round_trip():
    y, u = noise_free_arx(100, [0.5], [0.3, 0.1])
    m = fit_linear(series(y, u), ModelOrder(1, 2, 1))
    back = LinearModel.from_json(m.to_json())
    assert back.order == m.order and np.array_equal(back.coef, m.coef)


# estimator API

def test_sklearn_params_and_clone():
    est = ARXRegressor(n_a=3, n_b=2, n_k=4)
    assert est.get_params()["n_b"] == 2
    assert clone(est).get_params() == est.get_params()
    ann = ANNRegressor(n_a=2, epochs=7)
    assert clone(ann).set_params(epochs=9).epochs == 9


def test_predict_before_fit():
    with pytest.raises(NotFittedError):
        ARXRegressor().predict(np.ones(5))


def noisy(n, seed=0):
    rng = np.random.default_rng([seed, 1])
    y, u = noise_free_arx(n, [0.5], [0.3], seed=seed)
    return y + rng.normal(0, 0.1, n), u


def test_predict_shape_and_nan_prefix():
    y, u = noisy(60)
    pred = ARXRegressor(2, 3, 2).fit(y, u).predict(y, u)
    assert pred.shape == (60,)
    assert np.all(np.isnan(pred[:4])) and np.all(np.isfinite(pred[4:]))


def test_persistence():
    y = np.array([1.0, 2.0, 4.0, 8.0])
    assert np.array_equal(PersistenceForecaster(2).fit().predict(y)[2:], [1.0, 2.0])
    assert PersistenceForecaster().fit().predict_at(y) == 8.0


def _no_lookahead(est, y, u, t):
    rng = np.random.default_rng(t)
    y2, u2 = y.copy(), u.copy()
    cut = t - est.order_.n_k + 1
    y2[cut:] += rng.normal(size=y2.size - cut) * 10
    u2[cut:] += rng.normal(size=u2.size - cut) * 10
    return (est.predict_at(y, u, t) == est.predict_at(y2, u2, t)
            and est.predict(y, u)[t] == est.predict(y2, u2)[t])


@pytest.mark.parametrize("make", [
    lambda: ARXRegressor(2, 2, 1),
    lambda: ARXRegressor(1, 3, 3),
    lambda: ANNRegressor(2, 1, 2, epochs=5),
    lambda: PersistenceForecaster(2),
])
def test_no_lookahead(make):
    y, u = noisy(80)
    est = make().fit(y, u)
    for t in (10, 40, 79):
        assert _no_lookahead(est, y, u, t)


# network

def test_activation_identity():
    x = np.linspace(-5, 5, 101)
    assert np.allclose(activation(x), 2 / (1 + np.exp(-2 * x)) - 1, atol=1e-15)


def test_init_shapes_and_determinism():
    m = init_ann(ModelOrder(1, 1, 1), seed=3)
    assert [p.shape for p in m.params] == [(4, 2), (4,), (4, 4), (4,), (1, 4), (1,)]
    again = init_ann(ModelOrder(1, 1, 1), seed=3)
    assert all(np.array_equal(a, b) for a, b in zip(m.params, again.params))
    other = init_ann(ModelOrder(1, 1, 1), seed=4)
    assert not np.array_equal(m.params[0], other.params[0])


def test_weight_count_and_capacity_rule():
    assert count_weights(3) == 41
    assert baum_haussler_check(10, 1000, 0.1)
    assert not baum_haussler_check(100, 1000, 0.1)
    assert baum_haussler_check(41, 0.6 * 54 * 24, 0.1)


def test_zero_network_predicts_target_mean():
    m = init_ann(ModelOrder(2, 0, 1), 0)
    m = AnnModel(m.order, tuple(np.zeros_like(p) for p in m.params), np.zeros(2), np.ones(2),
                 1.3, 0.01, 0)
    assert np.all(np.asarray(__import__("fxtweet.models.ann", fromlist=["predict_rows"])
                             .predict_rows(m, np.random.default_rng(0).normal(size=(5, 2)))) == 1.3)


@pytest.mark.parametrize("seed", range(10))
def test_gradient_matches_finite_differences(seed):
    model, X, targets = random_gradient_case(seed)
    analytic = ann_gradient(model, X, targets)
    numeric = central_difference_gradient(model, X, targets)
    assert max_relative_error(analytic, numeric) < 1e-4


def test_zero_residual_gives_zero_gradient():
    model, X, _ = random_gradient_case(0)
    fitted = __import__("fxtweet.models.ann", fromlist=["predict_rows"]).predict_rows(model, X)
    for g in ann_gradient(model, X, fitted):
        assert np.allclose(g, 0.0, atol=1e-14)


def test_output_gradient_by_hand():
    # one row, one hidden unit per layer: dL/dW3 = residual * h2
    m = init_ann(ModelOrder(1, 0, 1), 1, hidden=1)
    x, target = np.array([[0.7]]), np.array([0.2])
    W1, b1, W2, b2, W3, b3 = (p.ravel()[0] for p in m.params)
    h2 = math.tanh(W2 * math.tanh(W1 * 0.7 + b1) + b2)
    residual = W3 * h2 + b3 - 0.2
    g = ann_gradient(m, x, target)
    assert g[4][0, 0] == pytest.approx(residual * h2, abs=1e-15)
    assert g[5][0] == pytest.approx(residual, abs=1e-15)


def test_gradient_shape_mismatch():
    m = init_ann(ModelOrder(2, 0, 1), 0)
    with pytest.raises(ShapeMismatch):
        ann_gradient(m, np.ones((3, 3)), np.ones(3))


def _linear_data(seed):
    y, u = noise_free_arx(400, [0.6], [0.35], seed=seed)
    return series(y, u)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_training_reduces_loss(seed):
    model = init_ann(ModelOrder(1, 1, 1), seed)
    trained, history = train_ann(model, _linear_data(seed), 100, 0.05, return_history=True)
    assert history[-1] < history[0] / 5
    X, targets = build_lag_matrix(_linear_data(seed), trained.order)
    assert history[-1] == pytest.approx(ann_loss(trained, X, targets))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_trained_network_fits_rate_scale_rows(seed):
    rng = np.random.default_rng(seed)
    u = 1.35 + 0.01 * rng.normal(size=400)
    y = np.full(400, 1.35)
    for t in range(1, 400):
        y[t] = 0.6 * y[t - 1] + 0.4 * u[t - 1]
    est = ANNRegressor(1, 1, 1, epochs=100, learning_rate=0.05, random_state=seed).fit(y, u)
    pred = est.predict(y, u)[1:]
    assert np.max(np.abs(pred - y[1:]) / y[1:]) < 0.01


def test_zero_epochs_leaves_weights():
    model = init_ann(ModelOrder(1, 1, 1), 0)
    trained = train_ann(model, _linear_data(0), epochs=0)
    assert all(np.array_equal(a, b) for a, b in zip(model.params, trained.params))


def test_huge_rate_diverges():
    with pytest.raises(DivergedLoss):
        train_ann(init_ann(ModelOrder(1, 1, 1), 0), _linear_data(0), 200, 1e3)


def test_capacity_warning():
    with pytest.warns(BaumHausslerWarning):
        train_ann(init_ann(ModelOrder(3, 3, 1), 0), _linear_data(0).slice(0, 60), epochs=1)


def test_ann_deterministic_and_serializable():
    data = _linear_data(1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BaumHausslerWarning)
        a = ANNRegressor(2, 2, 1, epochs=20, random_state=5).fit(data.y, data.u)
        b = ANNRegressor(2, 2, 1, epochs=20, random_state=5).fit(data.y, data.u)
    assert np.array_equal(a.predict(data.y, data.u), b.predict(data.y, data.u), equal_nan=True)
    back = AnnModel.from_json(a.model_.to_json())
    assert predict_ann(back, data, 50) == predict_ann(a.model_, data, 50)
    restored = estimator_from_dict(estimator_to_dict(a, "ann"))
    assert np.array_equal(restored.predict(data.y, data.u), a.predict(data.y, data.u), equal_nan=True)
    assert restored.epochs == 20


def test_estimator_dict_round_trip_linear():
    data = series(*noisy(100, 2))
    est = ARXRegressor(2, 1, 1).fit(data.y, data.u)
    restored = estimator_from_dict(estimator_to_dict(est, "arx", representation=AT_LEVEL))
    assert np.array_equal(restored.predict(data.y, data.u), est.predict(data.y, data.u), equal_nan=True)


def test_docstring_examples():
    import doctest

    import fxtweet.models.linear

    assert doctest.testmod(fxtweet.models.linear).failed == 0
