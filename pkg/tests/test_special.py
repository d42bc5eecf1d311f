import os
import sys
from fractions import Fraction

import numpy as np
import pytest

# Add project root to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.calculus.special import (
    nearest_int,
    rising,
    rising_exact,
    taylor_monomial,
    taylor_monomial_array,
    taylor_monomial_exact,
)
from src.core.errors import GammaPoleError, UndefinedRising


def test_nearest_int():
    assert nearest_int(3.0) == 3
    assert nearest_int(3.0 + 1e-12) == 3
    assert nearest_int(2.5) is None


@pytest.mark.parametrize("t, r, want", [
    (3, 2, Fraction(12)),
    (1, 0, Fraction(1)),
    (5, -2, Fraction(1, 12)),
    (0, 3, Fraction(0)),
    (-2, 2, Fraction(2)),
])
def test_rising_exact(t, r, want):
    assert rising_exact(t, r) == want


@pytest.mark.parametrize("t, r", [
    (3.0, 2.0),
    (5.0, -2.0),
    (0.0, 3.0),
    (-3.0, 3.0),
    (-3.0, -1.0),
    (2.5, 1.5),
    (0.3, 2.7),
    (4.0, -2.5),
    (-1.5, 2.0),
    (-0.5, 1.5),
    (-2.0, 0.5),
    (-2.0 + 1e-12, 0.5),
    (3.0 + 1e-12, 2.0),
])
def test_rising_recurrence(t, r):
    # t^(r+1) = (t + r) t^(r)
    assert rising(t, r + 1) == pytest.approx((t + r) * rising(t, r), rel=1e-11, abs=1e-300)


def test_rising_exact_recurrence_on_integer_grid():
    checked = 0
    for t in range(-5, 6):
        for r in range(-4, 5):
            try:
                lhs, rhs = rising_exact(t, r + 1), (t + r) * rising_exact(t, r)
            except UndefinedRising:
                continue
            assert lhs == rhs, (t, r)
            checked += 1
    assert checked > 60


def test_rising_float_matches_gamma_ratio():
    # 2.5^(1.5) = Gamma(4) / Gamma(2.5)
    assert rising(2.5, 1.5) == pytest.approx(6.0 / 1.329340388179137, rel=1e-12)


def test_rising_pole_cases():
    # t a pole, t + r not: the value is 0
    assert rising(-2.0, 0.5) == 0.0
    with pytest.raises(UndefinedRising):
        rising(0.5, -1.5)
    with pytest.raises(UndefinedRising):
        rising_exact(1, -2)


def test_taylor_monomial_examples():
    assert taylor_monomial(2, 4, 0) == pytest.approx(10.0)
    assert taylor_monomial(0, 7, 3) == 1.0
    assert taylor_monomial_exact(3, 4, 1) == Fraction(10)
    assert taylor_monomial(1.5, 4, 0) == pytest.approx(6.5625)


def test_taylor_monomial_vanishes_at_equal_arguments():
    for nu in (0.3, 1.0, 2.7, 4.0):
        assert taylor_monomial(nu, 5, 5) == 0.0


def test_negative_integer_order():
    assert taylor_monomial_exact(-2, 6, 0) == 0
    assert np.all(taylor_monomial_array(-2, np.arange(3, 10)) == 0.0)
    with pytest.raises(GammaPoleError):
        taylor_monomial_exact(-2, 2, 0)
    with pytest.raises(GammaPoleError):
        taylor_monomial_array(-1, np.array([1, 2]))


def test_array_matches_scalar():
    d = np.arange(0, 15)
    for nu in (0.4, 1.5, 2.0, 3.7):
        want = [taylor_monomial(nu, int(x), 0) for x in d]
        np.testing.assert_allclose(taylor_monomial_array(nu, d), want, rtol=1e-12)


def test_non_integer_order_below_base_is_zero():
    assert np.all(taylor_monomial_array(1.5, np.array([-3, -1, 0])) == 0.0)


def test_difference_of_monomial_lowers_order():
    rng = np.random.default_rng(3)
    for nu in rng.uniform(0.1, 5.0, size=10):
        d = np.arange(1, 20)
        step = taylor_monomial_array(nu, d) - taylor_monomial_array(nu, d - 1)
        np.testing.assert_allclose(step, taylor_monomial_array(nu - 1, d), rtol=1e-9)
