import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad

from piq import ThresholdRule, quantile_threshold
from piq.errors import NonFiniteError, UnsupportedError
from piq.oracle import theta_objective, theta_sharp_bruteforce
from piq.thresholding import apply_threshold, induced_penalty, top_q_indices

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_top_one():
    out, rep = quantile_threshold([3, -1, 2], 1, 0)
    np.testing.assert_array_equal(out, [3, 0, 0])
    assert not rep.tied


def test_top_two_with_ridge():
    out, rep = quantile_threshold([3, -1, 2], 2, 1)
    np.testing.assert_allclose(out, [1.5, 0, 1])
    xi, v, _ = theta_sharp_bruteforce(np.array([3.0, -1, 2]), 2, 1.0)
    assert abs(theta_objective(out, [3, -1, 2], 1.0) - v) <= 1e-12


def test_tie_goes_to_smaller_index():
    out, rep = quantile_threshold([2, -2, 1], 1, 0)
    np.testing.assert_array_equal(out, [2, 0, 0])
    assert rep.tied and rep.boundary_magnitude == 2


def test_zero_boundary_is_not_a_tie():
    _, rep = quantile_threshold([1, 0, 0], 2, 0)
    assert not rep.tied


def test_rejects_nonfinite():
    with pytest.raises(NonFiniteError):
        quantile_threshold([1, np.inf], 1)


@given(arrays(float, st.integers(1, 8), elements=finite), st.data(), st.sampled_from([0.0, 0.5, 1.0]))
def test_matches_bruteforce(s, data, nu):
    q = data.draw(st.integers(0, s.size))
    out, _ = quantile_threshold(s, q, nu)
    _, v, _ = theta_sharp_bruteforce(s, q, nu)
    assert theta_objective(out, s, nu) - v <= 1e-12 * (1 + abs(v))
    assert np.count_nonzero(out) <= q


@given(arrays(float, st.integers(1, 40), elements=finite), st.data())
def test_top_q_keeps_largest(scores, data):
    q = data.draw(st.integers(0, scores.size))
    idx, _ = top_q_indices(scores, q)
    assert idx.size == q
    rest = np.setdiff1d(np.arange(scores.size), idx)
    if q and rest.size:
        assert scores[idx].min() >= scores[rest].max()
    assert np.all(np.diff(idx) > 0)


def test_soft_hard_examples():
    np.testing.assert_array_equal(apply_threshold(ThresholdRule("soft", 1), [2, -0.5]), [1, 0])
    np.testing.assert_array_equal(apply_threshold(ThresholdRule("hard", 1), [2, -0.5]), [2, 0])
    v = np.array([0.3, -4.0, 0.0])
    np.testing.assert_array_equal(apply_threshold(ThresholdRule("soft", 0), v), v)


@given(st.sampled_from(["soft", "hard"]), st.floats(0, 10), arrays(float, 20, elements=finite))
def test_threshold_defining_properties(kind, lam, t):
    rule = ThresholdRule(kind, lam)
    a = apply_threshold(rule, t)
    np.testing.assert_array_equal(apply_threshold(rule, -t), -a)
    pos = np.abs(t)
    tp = apply_threshold(rule, pos)
    assert np.all(tp >= 0) and np.all(tp <= pos)
    order = np.argsort(pos)
    assert np.all(np.diff(tp[order]) >= 0)


def test_induced_penalty_examples():
    assert induced_penalty(ThresholdRule("soft", 2), 3) == 6
    assert induced_penalty(ThresholdRule("hard", 2), 3) == 2
    assert induced_penalty(ThresholdRule("hard", 2), 1) == 1.5
    with pytest.raises(UnsupportedError):
        induced_penalty(ThresholdRule("quantile", q=1), 1.0)


@pytest.mark.parametrize("kind", ["soft", "hard"])
@pytest.mark.parametrize("theta", [0.4, 1.0, 2.5, 5.0])
def test_induced_penalty_matches_integral(kind, theta):
    lam = 2.0
    rule = ThresholdRule(kind, lam)

    # generalized inverse sup{s : Theta(s) <= u}
    def inv(u):
        return u + lam if kind == "soft" else (lam if u < lam else u)

    val, _ = quad(lambda u: inv(u) - u, 0, theta, points=[lam] if theta > lam else None)
    assert abs(induced_penalty(rule, theta) - val) <= 1e-8
