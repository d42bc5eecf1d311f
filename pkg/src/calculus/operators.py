"""
Nabla difference, nabla definite integral, nabla fractional sum and the
nabla Caputo fractional difference on integer-offset grids.

Offsets passed as `a`, `c`, `d` are relative to the function's grid base
(plain ints) or GridPoints on that base.
"""
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.linalg import toeplitz

from src.calculus.special import taylor_monomial_array
from src.core.errors import InadmissibleSpec, InsufficientDomain
from src.core.grid import Grid, GridFunction, Order, PointLike, offset_of
from src.core.logging import get_logger

log = get_logger(__name__)


def difference_weights(order: int) -> np.ndarray:
    """(-1)^i C(order, i) for i = 0..order, as exact integers."""
    return np.array([(-1) ** i * special.comb(order, i, exact=True) for i in range(order + 1)], dtype=np.int64)


def nabla_row(order: int, t: int, lo: int, size: int) -> np.ndarray:
    """
    Integer row w with w @ x = nabla^order x(t), where x holds the values at
    offsets lo..lo+size-1.
    """
    if t - order < lo or t >= lo + size:
        raise InsufficientDomain(f"nabla^{order} at {t} needs offsets [{t - order}, {t}], have [{lo}, {lo + size - 1}]")
    row = np.zeros(size, dtype=np.int64)
    for i, w in enumerate(difference_weights(order)):
        row[t - i - lo] = w
    return row


def nabla_diff(f: GridFunction, order: int) -> GridFunction:
    """nabla^order f on the shrunken grid [lo + order, hi]."""
    if order < 0:
        raise InadmissibleSpec(f"difference order must be nonnegative, got {order}")
    if len(f) < order + 1:
        raise InsufficientDomain(f"nabla^{order} needs {order + 1} points, function has {len(f)}")
    if order == 0:
        return f
    return GridFunction(Grid(f.grid.base, f.lo + order, f.hi), np.diff(f.values, n=order))


def nabla_integral(f: GridFunction, c: PointLike, d: PointLike) -> float:
    """Nabla definite integral of f from c to d."""
    c, d = offset_of(c, f.grid.base), offset_of(d, f.grid.base)
    if c == d:
        return 0.0
    lo, hi = min(c, d) + 1, max(c, d)
    total = float(np.sum(f.values_on(lo, hi)))
    return total if d > c else -total


@lru_cache(maxsize=256)
def _frac_sum_weights(mu: float, length: int) -> np.ndarray:
    if mu == 0:
        w = np.eye(length)
    else:
        col = taylor_monomial_array(mu - 1, np.arange(1, length + 1))
        first_row = np.zeros(length)
        first_row[0] = col[0]
        w = toeplitz(col, first_row)
    w.setflags(write=False)
    return w


def frac_sum_weights(mu: float, length: int) -> np.ndarray:
    """
    Lower-triangular matrix of nabla_a^{-mu} acting on values at
    a+1..a+length: entry (t, s) is H_{mu-1}(t, rho(s)).
    """
    if mu < 0:
        raise InadmissibleSpec(f"fractional sum order must be nonnegative, got {mu}")
    return _frac_sum_weights(float(mu), int(length))


def frac_sum(f: GridFunction, nu: float, a: PointLike, extended: bool = False) -> GridFunction:
    """
    nabla_a^{-nu} f on [a+1, hi].

    With extended=True the result also carries the conventional zeros at
    the grid points <= a.
    """
    if nu < 0:
        raise InadmissibleSpec("negative order: use caputo_diff for differences")
    a = offset_of(a, f.grid.base)
    if nu == 0:
        return f
    if f.hi < a + 1:
        raise InsufficientDomain(f"fractional sum from {a} needs points beyond it, function ends at {f.hi}")
    h = f.values_on(a + 1, f.hi)
    result = GridFunction(Grid(f.grid.base, a + 1, f.hi), frac_sum_weights(nu, len(h)) @ h)
    if extended:
        result = result.extend_with_zeros(min(f.lo, a))
    return result


@lru_cache(maxsize=256)
def _caputo_operator(order: Order, length: int) -> np.ndarray:
    n = order.n_ceil
    diff = np.zeros((length, length + n))
    weights = difference_weights(n)
    for i in range(length):
        diff[i, n + i - np.arange(n + 1)] = weights
    op = frac_sum_weights(n - order.nu, length) @ diff
    op.setflags(write=False)
    log.debug("built Caputo operator nu=%s length=%d", order.nu, length)
    return op


def caputo_operator(order: Order, length: int) -> np.ndarray:
    """
    Matrix K with (K @ x)[i] = nabla_{a*}^nu x(a+1+i), where x holds values
    at offsets a-N+1..a+length.
    """
    return _caputo_operator(order, int(length))


def caputo_diff(f: GridFunction, order: Order, a: PointLike, extended: bool = False) -> GridFunction:
    """
    nabla_{a*}^nu f on [a+1, hi].

    extended=True adds the conventional zeros at a-N+1..a.
    """
    a = offset_of(a, f.grid.base)
    n = order.n_ceil
    if f.lo > a - n + 1:
        raise InsufficientDomain(f"Caputo difference of order {order.nu} needs f from offset {a - n + 1}, have {f.lo}")
    if f.hi < a + 1:
        raise InsufficientDomain(f"Caputo difference based at {a} needs points beyond it, function ends at {f.hi}")
    x = f.values_on(a - n + 1, f.hi)
    length = f.hi - a
    result = GridFunction(Grid(f.grid.base, a + 1, f.hi), caputo_operator(order, length) @ x)
    if extended:
        result = result.extend_with_zeros(a - n + 1)
    return result
