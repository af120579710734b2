import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fxtweet.evaluation import (
    SplitSpec,
    cell_seeds,
    direction_hits,
    directional_accuracy,
    evaluate,
    forecast_block,
    mae,
    make_estimator,
    rmse,
    select_order,
    sign_accuracy,
    split,
    sweep,
)
from fxtweet.exceptions import Empty, LengthMismatch, TooShort, ValidationError
from fxtweet.models import AT_LEVEL, AlignedSeries, ARXRegressor, PersistenceForecaster
from fxtweet.synth import SynthSpec, generate_synthetic

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_split_sizes():
    s = AlignedSeries(np.arange(10.0))
    train, test = split(s, SplitSpec(0.6))
    assert (len(train), len(test)) == (6, 4)
    train, test = split(s, SplitSpec(0.95))
    assert (len(train), len(test)) == (9, 1)
    assert split(s, SplitSpec(0.7))[0].y.size == 7


@pytest.mark.parametrize("fraction", [0.0, 1.0])
def test_split_degenerate(fraction):
    with pytest.raises(TooShort):
        SplitSpec(fraction)


def test_split_too_short():
    with pytest.raises(TooShort):
        split(AlignedSeries(np.arange(4.0)), SplitSpec(0.6))


def test_rmse_mae_examples():
    a = np.array([1.0, 2.0])
    assert rmse(a, a) == 0 and mae(a, a) == 0
    assert rmse(a + 0.002, a) == pytest.approx(0.002, abs=1e-15)
    assert rmse(a + [3, 4], a) == pytest.approx(math.sqrt(12.5), abs=1e-12)
    assert mae(a + [3, -4], a) == pytest.approx(3.5, abs=1e-12)
    assert mae([1.0 - 0.0013], [1.0]) == pytest.approx(0.0013, abs=1e-15)


def test_metric_errors():
    with pytest.raises(LengthMismatch):
        rmse([1, 2], [1])
    with pytest.raises(Empty):
        mae([], [])


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=40))
def test_rmse_dominates_mae(pairs):
    p, a = np.array(pairs).T
    assert rmse(p, a) >= mae(p, a) - 1e-9 * (1 + mae(p, a))


@given(st.lists(finite, min_size=1, max_size=20), st.floats(0.0, 100))
def test_rmse_equals_mae_for_equal_magnitudes(signs, size):
    e = np.where(np.array(signs) >= 0, size, -size)
    assert rmse(e, np.zeros_like(e)) == pytest.approx(mae(e, np.zeros_like(e)), rel=1e-12)


def test_directional_examples():
    y = np.array([1.0, 2.0, 1.5, 3.0])
    lag = np.r_[np.nan, y[:-1]][1:]
    assert directional_accuracy(y[1:], y[1:], lag) == 1.0
    assert directional_accuracy(lag, y[1:], lag) == 0.0
    # (actual, predicted) moves: (+,+) (-,+) (-,-) (+,0)
    lagged = np.zeros(4)
    assert directional_accuracy([1, 1, -1, 0], [1, -1, -1, 1], lagged) == 0.5


def test_sign_examples():
    assert sign_accuracy([1, -2, 3], [0.5, -1, 2]) == 1.0
    assert sign_accuracy([0, 0, 0], [1, -1, 1]) == 0.0
    assert sign_accuracy([1, 1, -1, 0], [1, -1, -1, 1]) == 0.5


@given(st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=30),
       st.floats(1e-3, 1e3), st.randoms(use_true_random=False))
def test_metric_invariances(rows, c, rnd):
    p, a, lag = np.array(rows).T
    order = list(range(len(rows)))
    rnd.shuffle(order)
    for f in (rmse, mae):
        assert f(p[order], a[order]) == pytest.approx(f(p, a), rel=1e-12, abs=1e-12)
    da = directional_accuracy(p, a, lag)
    assert directional_accuracy(p[order], a[order], lag[order]) == da
    assert sign_accuracy(c * (p - lag), c * (a - lag)) == sign_accuracy(p - lag, a - lag)
    assert np.array_equal(direction_hits(p, a, lag), ((a - lag) * (p - lag) > 0).astype(int))


def walk(n=300, seed=0):
    rng = np.random.default_rng(seed)
    y = 1.35 + np.cumsum(rng.normal(0, 0.002, n))
    return AlignedSeries(y, y + rng.normal(0, 0.001, n))


def test_persistence_on_constant_series():
    s = AlignedSeries(np.full(50, 1.3))
    m = evaluate(PersistenceForecaster().fit(), s, 30)
    assert m.rmse == 0 and m.directional == 0


def test_persistence_translation_equivariant():
    s = walk()
    shifted = AlignedSeries(s.y + 5.0, s.u)
    rw = PersistenceForecaster().fit()
    assert evaluate(rw, s, 180).rmse == pytest.approx(evaluate(rw, shifted, 180).rmse, abs=1e-12)


def test_forecast_block_uses_training_history():
    s = walk()
    est = ARXRegressor(3, 2, 2).fit(s.y[:180], s.u[:180])
    block = forecast_block(est, s, 180)
    assert block.predictions.size == 120 and np.all(np.isfinite(block.predictions))
    assert np.array_equal(block.lagged_actuals, s.y[178:298])


def test_arx_beats_random_walk_on_coupled_series():
    s = generate_synthetic(SynthSpec(n_hours=2000, kappa=0.8, seed=3))
    start = SplitSpec().train_size(len(s))
    arx = ARXRegressor(1, 2, 1).fit(s.y[:start], s.u[:start])
    rw = PersistenceForecaster().fit()
    assert evaluate(arx, s, start).rmse < evaluate(rw, s, start).rmse


def test_make_estimator():
    assert make_estimator("ar", 3, 5, 2).get_params()["n_b"] == 0
    assert make_estimator("ann", 1, 1, 1, epochs=3, rank_tol=1).epochs == 3
    with pytest.raises(ValidationError):
        make_estimator("svm", 1, 1, 1)


def test_cell_seeds_depend_on_cell_only():
    assert cell_seeds(0, 2, 3, 3) == cell_seeds(0, 2, 3, 3)
    assert cell_seeds(0, 2, 3, 3) != cell_seeds(0, 3, 2, 3)


def test_sweep_grid_shape():
    s = walk(200)
    grid = sweep(s, "arx", range(1, 11), range(1, 11), 1)
    assert len(grid.cells) == 100 and not grid.failures
    assert grid.matrix("rmse").shape == (10, 10)
    ar = sweep(s, "ar", range(1, 11), range(1, 11), 1)
    assert len(ar.cells) == 10 and ar.n_b_values == [0]


def test_ar_sweep_ignores_exogenous():
    s = walk(200)
    noise = AlignedSeries(s.y, np.random.default_rng(9).normal(size=200))
    a = sweep(s, "ar", range(1, 6), [1], 1).matrix("rmse")
    b = sweep(noise, "ar", range(1, 6), [1], 1).matrix("rmse")
    assert np.array_equal(a, b)


def test_constant_series_ar_sweep():
    s = AlignedSeries(np.full(60, 1.3))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        grid = sweep(s, "ar", range(1, 11), [0], 1, on_rank_deficient="min_norm")
    assert np.allclose(grid.matrix("rmse"), 0.0, atol=1e-12)


def test_constant_series_rank_failures_are_recorded():
    grid = sweep(AlignedSeries(np.full(60, 1.3)), "ar", range(1, 4), [0], 1)
    assert set(grid.cells) == {(1, 0)}
    assert set(grid.failures) == {(2, 0), (3, 0)}
    assert "RankDeficient" in grid.failures[(2, 0)]


def test_sweep_parallel_matches_serial():
    s = walk(200)
    a = sweep(s, "ann", range(1, 3), range(1, 3), 1, n_seeds=2, epochs=5)
    b = sweep(s, "ann", range(1, 3), range(1, 3), 1, n_seeds=2, epochs=5, n_jobs=2)
    for m in ("rmse", "mae", "directional", "error_variance"):
        assert np.array_equal(a.matrix(m), b.matrix(m))


def test_sweep_predictions_align_with_cells():
    s = walk(200)
    grid = sweep(s, "arx", [1, 2], [1], 1)
    preds = grid.predictions[(2, 1)][0]
    assert np.all(np.isnan(preds[:grid.test_start]))
    assert rmse(preds[grid.test_start:], s.y[grid.test_start:]) == pytest.approx(grid.cells[(2, 1)].rmse)


def test_sweep_json_and_csv():
    grid = sweep(walk(200), "arx", [1, 2], [1, 2, 3], 1)
    d = grid.to_dict()
    assert set(d["metrics"]) == {"rmse", "mae", "directional", "error_variance"}
    assert len(d["metrics"]["rmse"]) == 2 and len(d["metrics"]["rmse"][0]) == 3
    lines = grid.matrix_csv("mae").splitlines()
    assert lines[0] == "n_a\\n_b,1,2,3" and len(lines) == 3


def test_select_order_ignores_test_block():
    s = walk(300)
    start = SplitSpec().train_size(300)
    tampered = AlignedSeries(s.y.copy(), s.u.copy(), AT_LEVEL)
    tampered.y[start:] += 1.0
    assert select_order(s, "arx", range(1, 4), range(1, 4)) == select_order(
        tampered, "arx", range(1, 4), range(1, 4))
