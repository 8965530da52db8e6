import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aciq.errors import ConvergenceError
from aciq.quadrature import Tail, integrate_log_polar


def gaussian_moment(a):
    """int d^2y |y|^a exp(-|y|^2) = pi Gamma(1 + a/2)."""
    return math.pi * math.gamma(1 + a / 2)


@given(st.floats(-1.5, 4.0))
@settings(max_examples=25, deadline=None)
def test_power_gaussian_moments(a):
    res = integrate_log_polar(lambda t, phi: np.exp((a + 2) * t - np.exp(2 * t)) + 0 * phi,
                              Tail.exponential(a + 2), Tail.gaussian(), tol=1e-11)
    assert abs(res.value - gaussian_moment(a)) < 1e-9 * max(1.0, gaussian_moment(a))


def test_angular_dependence_integrates_exactly():
    # cos(phi)^2 averages to pi over the circle
    res = integrate_log_polar(lambda t, phi: np.exp(2 * t - np.exp(2 * t)) * np.cos(phi) ** 2,
                              Tail.exponential(2), Tail.gaussian(), tol=1e-12)
    assert res.value == pytest.approx(math.pi / 2, rel=1e-11)


def test_power_tail_on_the_right():
    # int d^2y (1 + |y|^2)^-3 = pi / 2
    res = integrate_log_polar(lambda t, phi: np.exp(2 * t) / (1 + np.exp(2 * t)) ** 3 + 0 * phi,
                              Tail.exponential(2), Tail.exponential(4), tol=1e-12)
    assert res.value == pytest.approx(math.pi / 2, rel=1e-10)


def test_compact_window():
    res = integrate_log_polar(lambda t, phi: np.exp(2 * t) + 0 * phi,
                              Tail.compact(0.0), Tail.compact(math.log(2.0)), tol=1e-13)
    assert res.value == pytest.approx(math.pi * 3, rel=1e-12)


def test_refuses_divergent_tail():
    with pytest.raises(ConvergenceError):
        integrate_log_polar(lambda t, phi: 0 * t + 0 * phi, Tail.exponential(0.0), Tail.gaussian())


def test_budget_exhaustion_carries_estimate():
    with pytest.raises(ConvergenceError) as info:
        integrate_log_polar(lambda t, phi: np.exp(2 * t - np.exp(2 * t)) * np.cos(40 * np.sin(5 * t)) + 0 * phi,
                            Tail.exponential(2), Tail.gaussian(), tol=1e-15, budget=2000)
    assert info.value.estimate is not None


def test_deterministic():
    f = lambda t, phi: np.exp(2 * t - np.exp(2 * t)) * (1 + 0.5 * np.cos(3 * phi))
    a = integrate_log_polar(f, Tail.exponential(2), Tail.gaussian(), tol=1e-10)
    b = integrate_log_polar(f, Tail.exponential(2), Tail.gaussian(), tol=1e-10)
    assert a.value == b.value
