"""Independent reference computations shared by the unit and acceptance suites."""

import numpy as np

from fxtweet.models import ModelOrder, ann_loss, init_ann


def central_difference_gradient(model, X, targets):
    """Per-parameter central differences of the loss, h = 1e-5 * max(1, |w|)."""
    grads = []
    params = [p.copy() for p in model.params]
    for k, p in enumerate(params):
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            w = p[idx]
            h = 1e-5 * max(1.0, abs(w))
            p[idx] = w + h
            up = ann_loss(model, X, targets, params)
            p[idx] = w - h
            down = ann_loss(model, X, targets, params)
            p[idx] = w
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric, floor=1e-8):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def random_gradient_case(seed):
    """A seeded random network, scaler and batch."""
    rng = np.random.default_rng(seed)
    order = ModelOrder(int(rng.integers(1, 4)), int(rng.integers(0, 4)), int(rng.integers(1, 3)))
    hidden = int(rng.integers(1, 6))
    model = init_ann(order, seed, hidden)
    n_in = order.n_inputs
    model = model.__class__(order, model.params, rng.normal(size=n_in), rng.uniform(0.5, 2, n_in),
                            float(rng.normal()), float(rng.uniform(0.5, 2)), seed)
    n = int(rng.integers(1, 30))
    return model, rng.normal(size=(n, n_in)), rng.normal(size=n)


def noise_free_arx(n, a, b, n_k=1, seed=0):
    """``y(t) = sum a_i y(t-n_k-i) + sum b_j u(t-n_k-j)`` driven by a random ``u``."""
    rng = np.random.default_rng(seed)
    u = rng.normal(size=n)
    y = np.zeros(n)
    start = n_k + max(len(a), len(b)) - 1
    y[:start] = rng.normal(size=start)
    for t in range(start, n):
        y[t] = sum(a[i] * y[t - n_k - i] for i in range(len(a))) + sum(
            b[j] * u[t - n_k - j] for j in range(len(b))
        )
    return y, u
