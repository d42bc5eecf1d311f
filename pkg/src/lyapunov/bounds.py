"""
Constant A, exact integrals of the N = 2 Green's function and the
Taylor-monomial inequalities behind their bounds.

Offsets are relative to a: t runs over -1..L, s over 1..L, rho(s) = s - 1.
"""
from enum import Enum
from typing import List, NamedTuple, Sequence

import numpy as np

from src.calculus.special import taylor_monomial, taylor_monomial_array
from src.core.config import get_settings
from src.core.errors import InadmissibleSpec, InsufficientDomain
from src.core.grid import Order, PointLike, integer_gap, offset_of
from src.greens.kernel import greens_closed_form


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class PropertyViolation(NamedTuple):
    prop: str
    alpha: float
    t: int
    s: int
    detail: str


def _check_gamma(gamma: float):
    if not 1 < gamma <= 2 + get_settings().pole_tol:
        raise InadmissibleSpec(f"gamma must lie in (1, 2], got {gamma}")


def _check_j(j: int):
    if j not in (0, 1):
        raise InadmissibleSpec(f"j must be 0 or 1, got {j}")


def _h2_shifted(d) -> np.ndarray:
    return taylor_monomial_array(2, d)


def constant_A(gamma: float, a: float, b: float) -> float:
    """max{ H_{gamma-1}(b,a) / H_1(b,a-1) * H_2(b,a-1), H_gamma(b,a) }."""
    _check_gamma(gamma)
    length = integer_gap(a, b)
    first = taylor_monomial(gamma - 1, length, 0) / (length + 1) * taylor_monomial(2, length, -1)
    return max(first, taylor_monomial(gamma, length, 0))


def integral_bound(gamma: float, j: int, a: float, b: float) -> float:
    """A for j = 0, H_2(b, a-1) for j = 1."""
    _check_j(j)
    if j == 0:
        return constant_A(gamma, a, b)
    _check_gamma(gamma)
    return taylor_monomial(2, integer_gap(a, b), -1)


def _coefficients(gamma: float, j: int, length: int) -> np.ndarray:
    """H_{gamma-j-1}(b, rho(s)) / H_{1-j}(b, a-1) for s = 1..L."""
    s = np.arange(1, length + 1)
    return taylor_monomial_array(gamma - j - 1, length - (s - 1)) / taylor_monomial(1 - j, length, -1)


def _tail(gamma: float, length: int) -> np.ndarray:
    """H_gamma(t, rho(s)) for t >= rho(s), else 0; rows t = -1..L."""
    t = np.arange(-1, length + 1)[:, None]
    d = t - (np.arange(1, length + 1)[None, :] - 1)
    return np.where(d >= 0, taylor_monomial_array(gamma, np.maximum(d, 0)), 0.0)


def greens_integral_table(gamma: float, j: int, a: float, b: float, side: Side) -> np.ndarray:
    """
    Rows t = a-1..b, columns s = a+1..b of the left integral
    int_{a-1}^t G_gamma(tau, s) nabla tau or the right one int_t^b.
    """
    _check_gamma(gamma)
    _check_j(j)
    length = integer_gap(a, b)
    t = np.arange(-1, length + 1)
    coef = _coefficients(gamma, j, length)[None, :]
    h2 = _h2_shifted(t + 1)[:, None]
    tail = _tail(gamma, length)
    left = coef * h2 - tail
    if Side(side) is Side.LEFT:
        return left
    return left[-1][None, :] - left


def greens_integral(gamma: float, j: int, a: float, b: float, t: PointLike, s: PointLike, side: Side) -> float:
    """Single entry of greens_integral_table, evaluated pointwise."""
    _check_gamma(gamma)
    _check_j(j)
    length = integer_gap(a, b)
    t, s = offset_of(t), offset_of(s)
    if not -1 <= t <= length or not 1 <= s <= length:
        raise InsufficientDomain(f"(t, s) = ({t}, {s}) outside [-1, {length}] x [1, {length}]")

    coef = taylor_monomial(gamma - j - 1, length, s - 1) / taylor_monomial(1 - j, length, -1)

    def left_at(tt: int) -> float:
        tail = taylor_monomial(gamma, tt, s - 1) if tt >= s - 1 else 0.0
        return coef * taylor_monomial(2, tt, -1) - tail

    if Side(side) is Side.LEFT:
        return left_at(t)
    return left_at(length) - left_at(t)


def greens_integral_brute(gamma: float, j: int, a: float, b: float, side: Side) -> np.ndarray:
    """Same table by summing closed-form kernel values over tau."""
    length = integer_gap(a, b)
    kernel = greens_closed_form(Order(gamma), j, a, b)
    # kernel rows start at offset -1 when N = 2
    values = kernel.table
    cumulative = np.vstack([np.zeros((1, length)), np.cumsum(values[1:], axis=0)])
    if Side(side) is Side.LEFT:
        return cumulative
    return cumulative[-1][None, :] - cumulative


def bound_violations(gamma: float, j: int, a: float, b: float) -> List[PropertyViolation]:
    """Every (t, s, side) where |integral| exceeds its bound."""
    bound = integral_bound(gamma, j, a, b)
    slack = get_settings().rel_tol * max(1.0, bound)
    out = []
    for side in Side:
        table = greens_integral_table(gamma, j, a, b, side)
        for ti, si in zip(*np.nonzero(np.abs(table) > bound + slack)):
            out.append(PropertyViolation(
                f"integral_bound_{side.value}", gamma, int(ti) - 1, int(si) + 1,
                f"|{table[ti, si]:.6g}| > {bound:.6g}",
            ))
    return out


def max_of_max_violations(gamma: float, j: int, a: float, b: float) -> List[PropertyViolation]:
    """
    |f(t) - g(t)| <= max{max f, max g} for the two nonnegative terms of the
    left integral, f = coef(s) H_2(t, a-1) and g = H_gamma(t, rho(s)).
    """
    _check_gamma(gamma)
    _check_j(j)
    length = integer_gap(a, b)
    f = _coefficients(gamma, j, length)[None, :] * _h2_shifted(np.arange(-1, length + 1) + 1)[:, None]
    g = _tail(gamma, length)
    out = []
    if np.any(f < 0) or np.any(g < 0):
        out.append(PropertyViolation("max_of_max_nonnegative", gamma, 0, 0, "negative term"))
    cap = np.maximum(f.max(axis=0), g.max(axis=0))[None, :]
    slack = get_settings().rel_tol * np.maximum(cap, 1.0)
    for ti, si in zip(*np.nonzero(np.abs(f - g) > cap + slack)):
        out.append(PropertyViolation("max_of_max", gamma, int(ti) - 1, int(si) + 1, "exceeds max of maxima"))
    return out


def monomial_property_violations(alphas: Sequence[float], length: int) -> List[PropertyViolation]:
    """
    Sign, monotonicity in s and monotonicity in t of H_alpha(t, rho(s)) for
    alpha > -1, plus H_nu(t, a) <= H_mu(t, a) for 0 < nu <= mu, on the
    offsets t, s in 0..length. An empty list means every property holds.
    """
    out = []
    span = np.arange(0, length + 1)
    for alpha in alphas:
        if alpha <= -1:
            raise InadmissibleSpec(f"monomial properties need alpha > -1, got {alpha}")
        for t in span:
            # s with rho(s) <= t, i.e. s <= t + 1
            s = np.arange(1, t + 2)
            values = taylor_monomial_array(alpha, t - (s - 1))
            for si, v in zip(s, values):
                if v < 0 or (si <= t and v <= 0):
                    out.append(PropertyViolation("sign", alpha, int(t), int(si), f"H = {v}"))
            steps = np.diff(values)
            if alpha > 0 and np.any(steps >= 0):
                out.append(PropertyViolation("decreasing_in_s", alpha, int(t), -1, str(steps)))
            if -1 < alpha < 0 and t >= 2:
                inside = np.diff(values[:t])
                if np.any(inside <= 0):
                    out.append(PropertyViolation("increasing_in_s", alpha, int(t), -1, str(inside)))

        for s in range(1, length + 1):
            t = np.arange(s - 1, length + 1)
            values = taylor_monomial_array(alpha, t - (s - 1))
            steps = np.diff(values)
            if alpha >= 0 and np.any(steps < 0):
                out.append(PropertyViolation("nondecreasing_in_t", alpha, -1, s, str(steps)))
            if alpha > 0 and np.any(steps[1:] <= 0):
                out.append(PropertyViolation("increasing_in_t", alpha, -1, s, str(steps)))
            if -1 < alpha < 0 and np.any(steps[2:] >= 0):
                out.append(PropertyViolation("decreasing_in_t", alpha, -1, s, str(steps)))

    positive = sorted(x for x in alphas if x > 0)
    for lo_order, hi_order in zip(positive, positive[1:]):
        small = taylor_monomial_array(lo_order, span)
        big = taylor_monomial_array(hi_order, span)
        for t in np.nonzero(small > big * (1 + get_settings().rel_tol))[0]:
            out.append(PropertyViolation("order_monotone", lo_order, int(t), 0, f"H_{lo_order} > H_{hi_order}"))
    return out
