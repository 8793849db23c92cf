import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from nncv.activations import heaviside, sigmoid, sigmoid_derivative, sigmoid_second_derivative, activate

finite = st.floats(-1e6, 1e6, allow_nan=False)
eps_st = st.sampled_from([1.0, 0.5, 0.1, 0.01])


def mp_sigmoid(x, eps):
    with mpmath.workdps(50):
        return float(1 / (1 + mpmath.exp(-mpmath.mpf(x) / mpmath.mpf(eps))))


def test_heaviside_values():
    assert heaviside(0.0) == 0.5
    assert heaviside(-0.0) == 0.5
    assert heaviside(3.7) == 1.0
    assert heaviside(-1e-300) == 0.0


def test_sigmoid_reference_values():
    assert sigmoid(0.0, 0.5) == 0.5
    assert sigmoid(0.5, 0.5) == pytest.approx(0.7310585786300049, abs=1e-15)
    for x in (-800.0, -30.0, -1.0, 0.3, 7.0, 800.0):
        for eps in (1.0, 0.5, 0.01):
            assert sigmoid(x, eps) == pytest.approx(mp_sigmoid(x, eps), rel=1e-14, abs=1e-300)


def test_sigmoid_no_overflow_extremes():
    with np.errstate(over="raise", invalid="raise"):
        assert sigmoid(-1e300, 0.01) == 0.0
        assert sigmoid(1e300, 0.01) == 1.0
        assert sigmoid_derivative(1e300, 0.01) == 0.0


def test_derivative_at_zero():
    assert sigmoid_derivative(0.0, 0.5) == 0.5
    assert sigmoid_derivative(0.0, 0.1) == pytest.approx(2.5)


def test_derivative_matches_central_difference():
    h = 1e-6
    fd = (sigmoid(1.0 + h, 0.5) - sigmoid(1.0 - h, 0.5)) / (2 * h)
    assert abs(sigmoid_derivative(1.0, 0.5) - fd) < 1e-8


def test_derivative_grid_relative_error():
    h = 1e-6
    x = np.linspace(-10, 10, 401)
    # difference the small tail, sigma(-|x|), to avoid cancellation near 1
    t = -np.abs(x)
    fd = (sigmoid(t + h, 1.0) - sigmoid(t - h, 1.0)) / (2 * h)
    rel = np.abs(sigmoid_derivative(x, 1.0) - fd) / sigmoid_derivative(x, 1.0)
    assert rel.max() < 1e-6


def test_second_derivative_matches_mpmath():
    for x in (-2.0, -0.3, 0.0, 0.7, 3.0):
        with mpmath.workdps(40):
            ref = mpmath.diff(lambda t: 1 / (1 + mpmath.exp(-t / mpmath.mpf(0.5))), x, 2)
        assert sigmoid_second_derivative(x, 0.5) == pytest.approx(float(ref), abs=1e-12)


def test_activate_dispatch():
    assert activate(0.0) == 0.5
    assert activate(0.0, 0.2) == 0.5
    assert activate(2.0) == 1.0


@pytest.mark.parametrize("eps", [0.0, -1.0])
def test_nonpositive_eps_rejected(eps):
    with pytest.raises(ValueError):
        sigmoid(1.0, eps)


def test_pointwise_convergence_monotone():
    for x in (-0.7, -0.05, 0.02, 0.4):
        gaps = [abs(sigmoid(x, e) - heaviside(x)) for e in (1.0, 0.5, 0.1, 0.01)]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_l1_gap_proportional_to_eps():
    # the exact value is 2*eps*ln(1 + exp(-1/eps)) + ... -> 2 ln 2 eps
    for eps in (0.1, 0.05, 0.01):
        left, _ = quad(lambda x: sigmoid(x, eps), -1, 0, epsabs=1e-13, limit=200)
        right, _ = quad(lambda x: 1 - sigmoid(x, eps), 0, 1, epsabs=1e-13, limit=200)
        assert (left + right) / eps == pytest.approx(2 * np.log(2), rel=1e-3)


@given(finite, eps_st)
def test_sigmoid_bounds_and_symmetry(x, eps):
    s, t = sigmoid(x, eps), sigmoid(-x, eps)
    assert 0.0 <= s <= 1.0
    assert abs(s + t - 1.0) <= 2 * np.finfo(float).eps


@given(finite, finite, eps_st)
def test_sigmoid_monotone(x, y, eps):
    lo, hi = sorted((x, y))
    assert sigmoid(lo, eps) <= sigmoid(hi, eps)


@given(st.floats(-50, 50), eps_st)
def test_delta_even_and_nonnegative(x, eps):
    assert sigmoid_derivative(x, eps) == sigmoid_derivative(-x, eps)
    assert sigmoid_derivative(x, eps) >= 0.0
