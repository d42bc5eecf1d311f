"""
(k, N-k) two-point boundary value problems for the nabla Caputo difference.

Left conditions nabla^i x(alpha) = A_i, i < k, sit at alpha = a - N + k;
right conditions nabla^{j_m} x(b) = B_m sit at b. All offsets below are
relative to a, so alpha = k - N and b = L.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.calculus.operators import caputo_diff, frac_sum, nabla_row
from src.calculus.special import taylor_monomial_array, taylor_monomial_exact
from src.core.errors import ConsistencyError, InadmissibleSpec, InconsistentSpec, SingularSystem
from src.core.grid import Grid, GridFunction, Order, integer_gap
from src.core.logging import get_logger
from src.linalg.dense import solve_dense
from src.linalg.exact import Matrix, det_exact, rank_exact, solve_exact, vandermonde_det_closed_form

log = get_logger(__name__)


class BvpSpec(BaseModel):
    """Equation data of a (k, N-k) problem. Unset data defaults to zeros."""
    model_config = ConfigDict(frozen=True)

    nu: float = Field(description="Order, nu > 1")
    a: float = Field(default=0.0)
    b: float
    k: int = Field(description="Number of left conditions")
    j_orders: Tuple[int, ...] = Field(description="Strictly increasing right difference orders")
    left_values: Optional[Tuple[float, ...]] = None
    right_values: Optional[Tuple[float, ...]] = None
    rhs: Optional[Tuple[float, ...]] = None

    @model_validator(mode="after")
    def _check_admissible(self) -> "BvpSpec":
        if self.nu <= 1:
            raise InadmissibleSpec(f"boundary problems need nu > 1, got {self.nu}")
        n = Order(self.nu).n_ceil
        length = integer_gap(self.a, self.b)
        if not 1 <= self.k <= n - 1:
            raise InadmissibleSpec(f"k must lie in 1..{n - 1}, got {self.k}")
        j = self.j_orders
        if len(j) != n - self.k:
            raise InadmissibleSpec(f"need N - k = {n - self.k} right orders, got {len(j)}")
        if any(x >= y for x, y in zip(j, j[1:])) or j[0] < 0 or j[-1] > n - 1:
            raise InadmissibleSpec(f"right orders {j} must be strictly increasing in 0..{n - 1}")
        need = max(1, j[-1] - n + self.k + 1)
        if length < need:
            raise InadmissibleSpec(f"b - a = {length} is below the admissible minimum {need}")
        for name, values, size in (
            ("left_values", self.left_values, self.k),
            ("right_values", self.right_values, n - self.k),
            ("rhs", self.rhs, length),
        ):
            if values is not None and len(values) != size:
                raise InconsistentSpec(f"{name} needs {size} entries, got {len(values)}")
        return self

    @property
    def order(self) -> Order:
        return Order(self.nu)

    @property
    def n_ceil(self) -> int:
        return self.order.n_ceil

    @property
    def length(self) -> int:
        return integer_gap(self.a, self.b)

    @property
    def alpha(self) -> int:
        """Offset of the left boundary point a - N + k."""
        return self.k - self.n_ceil

    @property
    def grid(self) -> Grid:
        return Grid(self.a, 1 - self.n_ceil, self.length)

    @property
    def left(self) -> Tuple[float, ...]:
        return self.left_values if self.left_values is not None else (0.0,) * self.k

    @property
    def right(self) -> Tuple[float, ...]:
        return self.right_values if self.right_values is not None else (0.0,) * len(self.j_orders)

    def rhs_function(self) -> GridFunction:
        values = self.rhs if self.rhs is not None else (0.0,) * self.length
        return GridFunction(Grid(self.a, 1, self.length), values)

    def with_data(self, **updates) -> "BvpSpec":
        """Copy with new boundary values or rhs, re-validated."""
        return BvpSpec(**{**self.model_dump(), **updates})


@dataclass(frozen=True)
class BvpSolution:
    x: GridFunction
    coefficients: Tuple[float, ...]
    exact: bool


@dataclass(frozen=True)
class DetFactorization:
    det_D: Fraction
    prefactor: Fraction
    det_D_hat: Fraction
    det_E: int

    @property
    def holds(self) -> bool:
        return self.det_D == self.prefactor * self.det_E and self.det_D_hat == self.det_E


@lru_cache(maxsize=128)
def _basis_exact(n: int, length: int) -> Tuple[Tuple[Fraction, ...], ...]:
    """Rows t = 1-N..L, columns p: H_p(t, p - N)."""
    return tuple(
        tuple(taylor_monomial_exact(p, t, p - n) for p in range(n))
        for t in range(1 - n, length + 1)
    )


@lru_cache(maxsize=256)
def basis_matrix(n: int, length: int) -> np.ndarray:
    """Float basis H_p(t, p - N) on offsets 1-N..L, one column per p."""
    t = np.arange(1 - n, length + 1)
    table = np.column_stack([taylor_monomial_array(p, t - (p - n)) for p in range(n)])
    table.setflags(write=False)
    return table


def _condition_rows(n: int, length: int, k: int, j_orders: Tuple[int, ...]) -> List[Tuple[int, int]]:
    """(difference order, offset) of every boundary condition, left first."""
    rows = [(i, k - n) for i in range(k)]
    rows += [(j, length) for j in j_orders]
    return rows


def _apply_rows(spec: BvpSpec, columns) -> List[List]:
    """Apply every boundary functional to each column of a table over the grid."""
    n, length = spec.n_ceil, spec.length
    return _apply_condition_rows(n, length, spec.k, spec.j_orders, columns)


def _apply_condition_rows(n: int, length: int, k: int, j_orders: Tuple[int, ...], columns) -> List[List]:
    lo, size = 1 - n, length + n
    out = []
    for order, t in _condition_rows(n, length, k, j_orders):
        w = nabla_row(order, t, lo, size)
        nz = np.nonzero(w)[0]
        out.append([sum(int(w[r]) * col[r] for r in nz) for col in columns])
    return out


@lru_cache(maxsize=4096)
def _boundary_matrix(n: int, length: int, k: int, j_orders: Tuple[int, ...]) -> Tuple[Tuple[Fraction, ...], ...]:
    table = _basis_exact(n, length)
    columns = [[row[p] for row in table] for p in range(n)]
    return tuple(tuple(row) for row in _apply_condition_rows(n, length, k, j_orders, columns))


@lru_cache(maxsize=4096)
def _boundary_det(n: int, length: int, k: int, j_orders: Tuple[int, ...]) -> Fraction:
    return det_exact(_boundary_matrix(n, length, k, j_orders))


def matrix_M(spec: BvpSpec) -> Matrix:
    """Exact N x N boundary matrix acting on the basis coefficients d_p."""
    return [list(row) for row in _boundary_matrix(spec.n_ceil, spec.length, spec.k, spec.j_orders)]


def d_entry_closed_form(length: int, n: int, p: int, j: int) -> Fraction:
    """Gamma(L+N-j) / (Gamma(L+N-p) Gamma(p-j+1)), zero when p < j."""
    if p < j:
        return Fraction(0)
    return Fraction(math.factorial(length + n - j - 1), math.factorial(length + n - p - 1) * math.factorial(p - j))


def matrix_D(spec: BvpSpec) -> Matrix:
    """Entry (m, p-k) = nabla^{j_m} H_p(b, a-N+p), p = k..N-1, exact."""
    m = matrix_M(spec)
    return [row[spec.k:] for row in m[spec.k:]]


def matrix_D_hat(spec: BvpSpec) -> Matrix:
    n = spec.n_ceil
    return [
        [Fraction(math.prod(i - j for i in range(p + 1, n))) for p in range(spec.k, n)]
        for j in spec.j_orders
    ]


def _power_matrix(j_orders: Tuple[int, ...]) -> List[List[int]]:
    size = len(j_orders)
    return [[(-j) ** (size - 1 - c) for c in range(size)] for j in j_orders]


def vandermonde_check(spec: BvpSpec) -> int:
    """det E, computed directly and by the product formula; they must agree."""
    direct = det_exact(_power_matrix(spec.j_orders))
    closed = vandermonde_det_closed_form(spec.j_orders)
    if direct != closed:
        raise ConsistencyError(f"det E direct {direct} != closed form {closed} for j = {spec.j_orders}")
    return closed


def det_D_factorization(spec: BvpSpec) -> DetFactorization:
    """det D = prefactor * det E with the Gamma-ratio prefactor, all rational."""
    n, length = spec.n_ceil, spec.length
    num = math.prod(math.factorial(length + n - j - 1) for j in spec.j_orders)
    den = math.prod(math.factorial(length + n - p - 1) for p in range(spec.k, n))
    den *= math.prod(math.factorial(n - j - 1) for j in spec.j_orders)
    return DetFactorization(
        det_D=det_exact(matrix_D(spec)),
        prefactor=Fraction(num, den),
        det_D_hat=det_exact(matrix_D_hat(spec)),
        det_E=vandermonde_check(spec),
    )


def homogeneous_kernel_dim(spec: BvpSpec) -> int:
    """Dimension of the solution space of the homogeneous problem."""
    return spec.n_ceil - rank_exact(matrix_M(spec))


def _particular_exact(spec: BvpSpec) -> List[Fraction]:
    """nabla_a^{-nu} h on 1-N..L for integer nu, zeros at offsets <= 0."""
    n, length = spec.n_ceil, spec.length
    h = [Fraction(v) for v in spec.rhs_function().values]
    w = [taylor_monomial_exact(n - 1, m + 1, 0) for m in range(length)]
    f = [sum(w[t - s] * h[s - 1] for s in range(1, t + 1)) for t in range(1, length + 1)]
    return [Fraction(0)] * n + f


def solve_boundary_coefficients(spec: BvpSpec) -> BvpSolution:
    """
    Solve for d in x = sum_p d_p H_p(t, a-N+p) + nabla_a^{-nu} h.

    M is always rational, so its exact determinant decides singularity
    before any float work. Integer orders stay rational end to end.
    """
    m = matrix_M(spec)
    if _boundary_det(spec.n_ceil, spec.length, spec.k, spec.j_orders) == 0:
        log.error("boundary matrix singular for admissible spec %s", spec)
        raise SingularSystem(f"boundary matrix is singular for nu={spec.nu}, k={spec.k}, j={spec.j_orders}")

    data = list(spec.left) + list(spec.right)
    n = spec.n_ceil
    if spec.order.is_integer:
        f = _particular_exact(spec)
        at_boundary = [r[0] for r in _apply_rows(spec, [f])]
        d = solve_exact(m, [Fraction(v) - g for v, g in zip(data, at_boundary)])
        table = _basis_exact(n, spec.length)
        x = [sum(c * row[p] for p, c in enumerate(d)) + fv for row, fv in zip(table, f)]
        return BvpSolution(GridFunction(spec.grid, [float(v) for v in x]), tuple(float(c) for c in d), True)

    f = frac_sum(spec.rhs_function(), spec.nu, 0, extended=True).extend_with_zeros(1 - n).values
    rhs = np.asarray(data, dtype=float) - np.array([r[0] for r in _apply_rows(spec, [f])], dtype=float)
    d = solve_dense(np.array(m, dtype=float), rhs)
    x = basis_matrix(n, spec.length) @ d + f
    return BvpSolution(GridFunction(spec.grid, x), tuple(float(c) for c in d), False)


def bvp_solve_direct(spec: BvpSpec) -> GridFunction:
    """Solution on N_{a-N+1}^b of the nonhomogeneous (k, N-k) problem."""
    return solve_boundary_coefficients(spec).x


def boundary_residuals(spec: BvpSpec, x: GridFunction) -> Dict[str, float]:
    """Max abs residual of the equation and of each side's conditions."""
    eq = caputo_diff(x, spec.order, 0).values - spec.rhs_function().values
    got = [r[0] for r in _apply_rows(spec, [x.values])]
    want = list(spec.left) + list(spec.right)
    diff = np.abs(np.array(got, dtype=float) - np.array(want, dtype=float))
    return {
        "equation": float(np.max(np.abs(eq))),
        "left": float(np.max(diff[:spec.k])),
        "right": float(np.max(diff[spec.k:])),
    }
