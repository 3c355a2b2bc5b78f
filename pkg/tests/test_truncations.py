import math

import numpy as np
import pytest

from kstrunc.core.errors import InvalidLevelError, PositivityError
from kstrunc.truncations import (
    g_k,
    nonnegative_part,
    nonnegative_power,
    smooth_t_k,
    smooth_t_k_prime,
    t_k,
    theta_k,
)


def test_t_k_values() -> None:
    assert t_k(5.0, 2.0) == 2.0
    assert t_k(-5.0, 2.0) == -2.0
    assert t_k(1.5, 2.0) == 1.5
    assert t_k(7.0, math.inf) == 7.0


def test_negative_level() -> None:
    with pytest.raises(InvalidLevelError):
        t_k(1.0, -1.0)
    with pytest.raises(InvalidLevelError):
        theta_k(1.0, -0.5)


def test_t_k_plus_g_k_is_identity() -> None:
    rng = np.random.default_rng(2)
    # dyadic values keep every sum and difference exact in floating point
    s = rng.integers(-10 * 1024, 10 * 1024, 1000) / 1024
    k = rng.integers(0, 5 * 1024, 1000) / 1024
    for value, level in zip(s, k, strict=True):
        assert t_k(value, level) + g_k(value, level) == value
        assert abs(t_k(value, level)) <= level
        assert g_k(value, level) == 0 or abs(value) > level


def test_theta_k_derivative_is_t_k() -> None:
    rng = np.random.default_rng(3)
    s = rng.standard_normal(1000) * 4
    k = 0.1 + rng.random(1000) * 3
    step = 1e-6
    derivative = (theta_k(s + step, k) - theta_k(s - step, k)) / (2 * step)
    np.testing.assert_allclose(derivative, t_k(s, k), atol=1e-6)


def test_theta_k_is_nonnegative() -> None:
    s = np.linspace(-10, 10, 201)
    assert np.all(theta_k(s, 2.0) >= 0)
    assert theta_k(0.0, 2.0) == 0.0
    assert theta_k(5.0, 2.0) == pytest.approx(2.0 * 5.0 - 2.0)
    assert np.all(theta_k(s, 0.0) == 0)


def test_smooth_truncation() -> None:
    k = 2.0
    assert smooth_t_k(0.5, k) == 0.5
    assert smooth_t_k(3.0, k) == pytest.approx(k)
    assert smooth_t_k(-3.0, k) == pytest.approx(-k)
    # continuous derivative at both ends of the blend
    assert smooth_t_k_prime(1.0, k) == pytest.approx(1.0)
    assert smooth_t_k_prime(2.0, k) == pytest.approx(0.0)
    s = np.linspace(-4, 4, 801)
    prime = smooth_t_k_prime(s, k)
    assert prime.min() >= 0
    assert prime.max() <= 4 / 3 + 1e-12


def test_smooth_truncation_needs_positive_level() -> None:
    with pytest.raises(InvalidLevelError):
        smooth_t_k(1.0, 0.0)


def test_nonnegative_power_clips_round_off() -> None:
    values = np.array([-1e-14, 0.0, 4.0])
    np.testing.assert_array_equal(nonnegative_power(values, 0.5), [0.0, 0.0, 2.0])


def test_nonnegative_part_rejects_negative_density() -> None:
    with pytest.raises(PositivityError, match="nonnegative density"):
        nonnegative_part(np.array([-1e-3, 1.0]))


def test_nonnegative_part_threshold_is_absolute() -> None:
    large = np.array([-5e-13, 1e6])
    np.testing.assert_array_equal(nonnegative_part(large), [0.0, 1e6])
    # a relative dip of 1e-12 against a large maximum is still rejected
    with pytest.raises(PositivityError):
        nonnegative_part(np.array([-1e-9, 1e6]))
