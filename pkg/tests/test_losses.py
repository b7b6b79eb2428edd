import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from piq import huber, huberized_hinge, logistic, parse_loss, quadratic
from piq.errors import ConfigError, DataError
from piq.losses import bregman_divergence, gamma_univariate_min, loss_gradient, loss_value

LOSSES = [quadratic(), logistic(), huber(1.0), huberized_hinge(0.5)]


def labels(model, r, n):
    return (r.random(n) < 0.5).astype(float) if model.is_classification else r.standard_normal(n)


def test_values():
    assert loss_value(quadratic(), [1.0, 2.0], [1.0, 2.0]) == 0
    assert abs(loss_value(logistic(), [0.0], [1.0]) - math.log(2)) <= 1e-15
    assert abs(loss_value(huber(1), [0.0], [3.0]) - 2.5) <= 1e-15


def test_huber_matches_integrated_psi():
    psi = lambda r: max(-1.0, min(1.0, r))
    val, _ = quad(psi, 0, 3, points=[1])
    assert abs(loss_value(huber(1), [0.0], [3.0]) - val) <= 1e-10


def test_gradients():
    assert loss_gradient(logistic(), np.array([0.0]), np.array([1.0]))[0] == -0.5
    np.testing.assert_array_equal(loss_gradient(quadratic(), np.ones(3), np.ones(3)), 0)


def test_zero_infimum():
    for m in LOSSES:
        y = np.array([0.0, 1.0]) if m.is_classification else np.array([-2.0, 3.0])
        t, v = gamma_univariate_min(m, 0.0, y[1], 0.0)
        assert v <= 1e-9


def test_univariate_examples():
    assert gamma_univariate_min(quadratic(), 0, 4, 0) == (4.0, 0.0)
    t, v = gamma_univariate_min(quadratic(), 0, 4, 1)
    assert (t, v) == (2.0, 4.0)
    grid = np.arange(-10, 10, 1e-4)
    vals = 0.5 * (4 - grid) ** 2 + 0.5 * grid**2
    assert abs(grid[np.argmin(vals)] - 2) <= 1e-4


def test_univariate_logistic_far_side():
    _, v0 = gamma_univariate_min(logistic(), -5.0, 1.0, 0.0)
    assert v0 <= 1e-9
    t, v = gamma_univariate_min(logistic(), -5.0, 1.0, 1e-4)
    grid = np.linspace(0, 30, 300_001)
    vals = np.logaddexp(0, -5 + grid) - (-5 + grid) + 0.5e-4 * grid**2
    assert abs(t - grid[np.argmin(vals)]) <= 1e-3
    assert abs(v - vals.min()) <= 1e-8


@given(st.integers(0, 10_000), st.sampled_from(range(4)), st.floats(0, 2))
def test_univariate_is_stationary(seed, k, nu):
    m = LOSSES[k]
    r = np.random.default_rng(seed)
    a = float(r.normal(scale=3))
    y = float(labels(m, r, 1)[0])
    if nu == 0 and m.kind in ("logistic",):
        nu = 1e-4
    t, v = gamma_univariate_min(m, a, y, nu)
    for d in (-1e-3, 1e-3):
        w = float(m.per_sample(np.array([a + t + d]), np.array([y]))[0]) + 0.5 * nu * (t + d) ** 2
        assert w >= v - 1e-10


@pytest.mark.parametrize("model", LOSSES, ids=lambda m: m.describe())
def test_gradient_matches_central_differences(model):
    r = np.random.default_rng(5)
    eta = r.normal(scale=2, size=50)
    y = labels(model, r, 50)
    g = loss_gradient(model, eta, y)
    h = 1e-6
    fd = (model.per_sample(eta + h, y) - model.per_sample(eta - h, y)) / (2 * h)
    np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-8)


@given(st.integers(0, 10_000), st.sampled_from(range(4)))
def test_bregman_bounds(seed, k):
    m = LOSSES[k]
    r = np.random.default_rng(seed)
    a, b = r.normal(scale=3, size=(2, 10))
    y = labels(m, r, 10)
    d = bregman_divergence(m, a, b, y)
    assert d >= -1e-10
    assert d <= 0.5 * m.lipschitz * float((a - b) @ (a - b)) + 1e-10
    assert abs(bregman_divergence(m, a, a, y)) <= 1e-12


def test_quadratic_bregman_is_half_squared_distance():
    r = np.random.default_rng(0)
    a, b, y = r.standard_normal((3, 6))
    assert abs(bregman_divergence(quadratic(), a, b, y) - 0.5 * float((a - b) @ (a - b))) <= 1e-12


@given(st.integers(0, 10_000), st.sampled_from(range(4)), st.floats(0, 1))
def test_convexity(seed, k, w):
    m = LOSSES[k]
    r = np.random.default_rng(seed)
    a, b = r.normal(scale=3, size=(2, 8))
    y = labels(m, r, 8)
    mid = loss_value(m, w * a + (1 - w) * b, y)
    assert mid <= w * loss_value(m, a, y) + (1 - w) * loss_value(m, b, y) + 1e-9


def test_lipschitz_constants():
    assert quadratic().lipschitz == 1 and logistic().lipschitz == 0.25
    assert huber(2).lipschitz == 1 and huberized_hinge(0.5).lipschitz == 2


def test_parse_and_validate():
    assert parse_loss("huber:2").delta == 2
    assert parse_loss("logistic").kind == "logistic"
    with pytest.raises(ConfigError):
        parse_loss("hinge")
    with pytest.raises(ConfigError):
        parse_loss("quadratic:2")
    with pytest.raises(DataError):
        loss_value(logistic(), [0.0], [0.5])
