"""
Nabla Caputo initial value problems.

Two initial-condition styles are supported:
  * derivative style, nabla^k x(a) = c_k (variation of constants);
  * point-value style, x(a-i) = A_i, optionally with the potential term
    q(t) x(t-1), solved by forward substitution.
"""
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.calculus.operators import caputo_operator, frac_sum, nabla_row
from src.calculus.special import taylor_monomial_array, taylor_monomial_exact
from src.core.errors import InconsistentSpec, InsufficientDomain
from src.core.grid import Grid, GridFunction, Order, PointLike, integer_gap, offset_of
from src.core.logging import get_logger

log = get_logger(__name__)

LEADING_COEFFICIENT_TOL = 1e-12


class IvpSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    nu: float = Field(gt=0, description="Order of the Caputo difference")
    a: float = Field(default=0.0, description="Base point")
    b: float = Field(description="Right end point, b - a a positive integer")
    rhs: Tuple[float, ...] = Field(description="h on a+1..b")
    initial_values: Optional[Tuple[float, ...]] = Field(default=None, description="c_k = nabla^k x(a)")
    point_values: Optional[Tuple[float, ...]] = Field(default=None, description="A_i = x(a-i)")
    potential: Optional[Tuple[float, ...]] = Field(default=None, description="q on a+1..b")

    @model_validator(mode="after")
    def _check(self) -> "IvpSpec":
        n = Order(self.nu).n_ceil
        length = integer_gap(self.a, self.b)
        if (self.initial_values is None) == (self.point_values is None):
            raise InconsistentSpec("set exactly one of initial_values and point_values")
        if self.potential is not None and self.point_values is None:
            raise InconsistentSpec("a potential q requires the point-value initial conditions")
        conditions = self.initial_values if self.initial_values is not None else self.point_values
        if len(conditions) != n:
            raise InconsistentSpec(f"expected {n} initial conditions, got {len(conditions)}")
        if len(self.rhs) != length:
            raise InconsistentSpec(f"rhs must have b - a = {length} values, got {len(self.rhs)}")
        if self.potential is not None and len(self.potential) != length:
            raise InconsistentSpec(f"potential must have {length} values, got {len(self.potential)}")
        return self

    @property
    def order(self) -> Order:
        return Order(self.nu)

    @property
    def length(self) -> int:
        return integer_gap(self.a, self.b)

    @property
    def grid(self) -> Grid:
        """N_{a-N+1}^b as offsets from a."""
        return Grid(self.a, 1 - self.order.n_ceil, self.length)


def general_solution_basis(order: Order, a: PointLike, t_range: Grid) -> List[GridFunction]:
    """H_p(t, a-N+p) for p = 0..N-1 on t_range."""
    n = order.n_ceil
    a = offset_of(a, t_range.base)
    if t_range.lo < a - n + 1:
        raise InsufficientDomain(f"basis lives on offsets >= {a - n + 1}, grid starts at {t_range.lo}")
    t = np.arange(t_range.lo, t_range.hi + 1)
    return [GridFunction(t_range, taylor_monomial_array(p, t - (a - n + p))) for p in range(n)]


def basis_initial_values(n: int) -> List[List[Fraction]]:
    """
    Row i, column p: nabla^i H_p(t, a-N+p) at t = a. Upper triangular with
    unit diagonal.
    """
    lo = 1 - n
    size = n
    table = [[taylor_monomial_exact(p, t, p - n) for p in range(n)] for t in range(lo, 1)]
    rows = []
    for i in range(n):
        w = nabla_row(i, 0, lo, size)
        rows.append([sum(int(w[r]) * table[r][p] for r in range(size)) for p in range(n)])
    return rows


def ivp_solve(spec: IvpSpec) -> GridFunction:
    """Solution on N_{a-N+1}^b."""
    if spec.initial_values is not None:
        return _solve_derivative_style(spec)
    return forward_substitute(spec)


def _solve_derivative_style(spec: IvpSpec) -> GridFunction:
    order, grid = spec.order, spec.grid
    t = np.arange(grid.lo, grid.hi + 1)
    x = np.zeros(len(grid))
    for k, c in enumerate(spec.initial_values):
        x += c * taylor_monomial_array(k, t)
    h = GridFunction(Grid(spec.a, 1, spec.length), spec.rhs)
    x += frac_sum(h, order.nu, 0, extended=True).extend_with_zeros(grid.lo).values
    return GridFunction(grid, x)


def forward_substitute(spec: IvpSpec) -> GridFunction:
    """
    Point-value IVP with optional potential, one unknown per step.

    The newest unknown x(t) enters the equation at t with coefficient
    H_{N-nu-1}(t, rho(t)) = 1.
    """
    order, grid, length = spec.order, spec.grid, spec.length
    n = order.n_ceil
    op = caputo_operator(order, length)
    q = np.zeros(length) if spec.potential is None else np.asarray(spec.potential, dtype=float)
    f = np.asarray(spec.rhs, dtype=float)

    x = np.zeros(length + n)
    for i, value in enumerate(spec.point_values):
        x[n - 1 - i] = value

    for i in range(length):
        col = n + i
        lead = op[i, col]
        if abs(lead - 1.0) > LEADING_COEFFICIENT_TOL:
            raise AssertionError(f"leading coefficient {lead} != 1 at step {i + 1}")
        known = op[i, :col] @ x[:col] + q[i] * x[col - 1]
        x[col] = (f[i] - known) / lead

    log.debug("forward substitution done: nu=%s, %d steps", order.nu, length)
    return GridFunction(grid, x)


def weighted_residual(order: Order, x: GridFunction, q: np.ndarray, f: np.ndarray) -> np.ndarray:
    """nabla_{a*}^nu x(t) + q(t) x(t-1) - f(t) for t = a+1..b, a = offset 0."""
    n = order.n_ceil
    xs = x.values_on(1 - n, x.hi)
    length = x.hi
    return caputo_operator(order, length) @ xs + np.asarray(q) * xs[n - 1:n - 1 + length] - np.asarray(f)
