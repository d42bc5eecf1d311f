"""
Generalized rising function and nabla Taylor monomials.

Integer arguments go through exact rational arithmetic; everything else
goes through log-Gamma with the sign tracked separately.
"""
import math
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import special

from src.core.config import get_settings
from src.core.errors import GammaPoleError, UndefinedRising
from src.core.grid import PointLike, offset_of


def nearest_int(x: float, tol: Optional[float] = None) -> Optional[int]:
    """The integer within tol of x, or None."""
    tol = get_settings().pole_tol if tol is None else tol
    r = round(x)
    return int(r) if abs(x - r) <= tol else None


def rising_exact(t: int, r: int) -> Fraction:
    """
    t^(r) for integer t and r.

    For r >= 0 this is t(t+1)...(t+r-1); for r < 0 it is
    1/((t-1)(t-2)...(t+r)). Both products reproduce all three defined
    cases of the four-case definition.
    """
    t, r = int(t), int(r)
    if r >= 0:
        prod = 1
        for i in range(r):
            prod *= t + i
        return Fraction(prod)

    denom = 1
    for i in range(1, -r + 1):
        denom *= t - i
    if denom == 0:
        raise UndefinedRising(f"rising({t}, {r}): t+r={t + r} is a nonpositive integer and t is not")
    return Fraction(1, denom)


def _gamma_ratio(x: float, y: float) -> float:
    """Gamma(x)/Gamma(y) for non-pole x, y."""
    sign = special.gammasgn(x) * special.gammasgn(y)
    return float(sign * math.exp(special.gammaln(x) - special.gammaln(y)))


def rising(t: float, r: float) -> float:
    """Generalized rising function t^(r) = Gamma(t+r)/Gamma(t) with its pole cases."""
    ti, ri = nearest_int(t), nearest_int(r)
    if ti is not None and ri is not None:
        return float(rising_exact(ti, ri))

    t_pole = ti is not None and ti <= 0
    s = nearest_int(t + r)
    s_pole = s is not None and s <= 0

    if s_pole and not t_pole:
        raise UndefinedRising(f"rising({t}, {r}): t+r is a nonpositive integer and t is not")
    if t_pole and not s_pole:
        return 0.0
    if t_pole and s_pole:
        raise GammaPoleError(f"rising({t}, {r}): both t and t+r are poles but r is not an integer")
    return _gamma_ratio(t + r, t)


def _difference(t: PointLike, s: PointLike) -> int:
    return t - s if hasattr(t, "base") and hasattr(s, "base") else offset_of(t) - offset_of(s)


def taylor_monomial_exact(p: int, t: PointLike, s: PointLike) -> Fraction:
    """H_p(t, s) for integer p, exact."""
    d = _difference(t, s)
    if p >= 0:
        return rising_exact(d, p) / math.factorial(p)
    k = -p
    if d >= k + 1:
        return Fraction(0)
    raise GammaPoleError(f"H_{p}(t, s) with t - s = {d}: 1/Gamma({p + 1}) vanishes only for t - s >= {k + 1}")


def taylor_monomial(nu: float, t: PointLike, s: PointLike) -> float:
    """H_nu(t, s) = (t-s)^(nu) / Gamma(nu+1)."""
    p = nearest_int(nu)
    if p is not None:
        return float(taylor_monomial_exact(p, t, s))
    return rising(_difference(t, s), nu) / float(special.gamma(nu + 1))


def taylor_monomial_array(nu: float, d) -> np.ndarray:
    """H_nu for an integer array of differences d = t - s."""
    d = np.asarray(d, dtype=np.int64)
    p = nearest_int(nu)
    if p is not None:
        if p >= 0:
            out = np.ones(d.shape, dtype=float)
            for i in range(p):
                out *= d + i
            return out / math.factorial(p)
        if np.any(d <= -p):
            raise GammaPoleError(f"H_{p} requested at t - s <= {-p}")
        return np.zeros(d.shape, dtype=float)

    out = np.zeros(d.shape, dtype=float)
    pos = d > 0
    if np.any(pos):
        dp = d[pos].astype(float)
        sign = special.gammasgn(dp + nu) * special.gammasgn(nu + 1)
        out[pos] = sign * np.exp(special.gammaln(dp + nu) - special.gammaln(dp) - special.gammaln(nu + 1))
    return out
