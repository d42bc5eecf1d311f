"""
Green's functions of (k, N-k) problems.

Tables are indexed [t - (a-N+1), s - (a+1)], rows t = a-N+1..b and
columns s = a+1..b. A kernel with sign = +1 solves nabla_{a*}^nu x = h;
the (N-1, 1) closed form carries sign = -1 and solves -nabla_{a*}^nu x = h.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from src.calculus.operators import nabla_row
from src.calculus.special import taylor_monomial_array
from src.core.errors import GridMismatch, InadmissibleSpec, SingularSystem
from src.core.grid import Grid, GridFunction, Order, PointLike, integer_gap
from src.core.logging import get_logger
from src.linalg.dense import solve_dense
from src.linalg.exact import det_exact
from src.solvers.bvp import BvpSpec, basis_matrix, bvp_solve_direct, matrix_D

log = get_logger(__name__)

CLOSED_FORM_SIGN = -1


@dataclass(frozen=True, eq=False)
class GreensKernel:
    spec: BvpSpec
    table: np.ndarray
    u_table: np.ndarray
    beta: float
    sign: int = 1

    def __post_init__(self):
        for name in ("table", "u_table"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.beta == 0:
            raise SingularSystem("Green's function with beta = 0")

    @property
    def t_grid(self) -> Grid:
        return self.spec.grid

    @property
    def s_grid(self) -> Grid:
        return Grid(self.spec.a, 1, self.spec.length)

    def __call__(self, t: PointLike, s: PointLike) -> float:
        return float(self.table[self.t_grid.index(t), self.s_grid.index(s)])

    def column(self, s: PointLike) -> GridFunction:
        """G(., s) as a function of t."""
        return GridFunction(self.t_grid, self.table[:, self.s_grid.index(s)])


def shifted_monomials(order: Order, length: int) -> np.ndarray:
    """
    H_{nu-1}(t, rho(s)) for t >= rho(s) and 0 below, on the kernel index set.
    With a = 0 and s >= 1, rho(s) = s - 1.
    """
    n = order.n_ceil
    t = np.arange(1 - n, length + 1)[:, None]
    s = np.arange(1, length + 1)[None, :]
    d = t - (s - 1)
    return np.where(d >= 0, taylor_monomial_array(order.nu - 1, np.maximum(d, 0)), 0.0)


def _right_forcing(spec: BvpSpec, shifted: np.ndarray) -> np.ndarray:
    """nabla^{j_m} of H_{nu-1}(., rho(s)) at b, one row per j_m."""
    n, length = spec.n_ceil, spec.length
    rows = np.array([nabla_row(j, length, 1 - n, length + n) for j in spec.j_orders], dtype=float)
    return rows @ shifted


def _beta(spec: BvpSpec) -> float:
    beta = det_exact(matrix_D(spec))
    if beta == 0:
        log.error("det D vanished for admissible spec %s", spec)
        raise SingularSystem(f"det D = 0 for nu={spec.nu}, k={spec.k}, j={spec.j_orders}")
    return float(beta)


@lru_cache(maxsize=1024)
def _kernel_tables(order: Order, length: int, k: int, j_orders: Tuple[int, ...]):
    spec = BvpSpec(nu=order.nu, b=length, k=k, j_orders=j_orders)
    beta = _beta(spec)
    shifted = shifted_monomials(order, length)
    d = np.array(matrix_D(spec), dtype=float)
    coeffs = solve_dense(d, -_right_forcing(spec, shifted))
    u = basis_matrix(order.n_ceil, length)[:, k:] @ coeffs
    log.debug("Green's kernel nu=%s k=%d j=%s: %s table", order.nu, k, j_orders, u.shape)
    return u + shifted, u, beta


def greens_kernel(spec: BvpSpec) -> GreensKernel:
    """
    Kernel of the (k, N-k) problem with homogeneous boundary data.

    For each s, u(., s) = sum_{p>=k} c_p H_p(t, a-N+p) with D c equal to
    minus the right forcing of H_{nu-1}(., rho(s)).
    """
    table, u, beta = _kernel_tables(spec.order, spec.length, spec.k, spec.j_orders)
    return GreensKernel(spec=spec, table=table, u_table=u, beta=beta)


def greens_kernel_determinant(spec: BvpSpec) -> GreensKernel:
    """
    Same kernel with u as the bordered determinant

        | 0      H_k(t, a-N+k) ... H_{N-1}(t, a-1) |
        | r_m(s)              D                    |  / beta,

    r_m(s) = nabla^{j_m} H_{nu-1}(b, rho(s)).
    """
    n, k, length = spec.n_ceil, spec.k, spec.length
    beta = _beta(spec)
    shifted = shifted_monomials(spec.order, length)
    d = np.array(matrix_D(spec), dtype=float)
    forcing = _right_forcing(spec, shifted)
    top = basis_matrix(n, length)[:, k:]

    size = n - k + 1
    n_t, n_s = top.shape[0], length
    bordered = np.zeros((n_t, n_s, size, size))
    bordered[:, :, 0, 1:] = top[:, None, :]
    bordered[:, :, 1:, 0] = forcing.T[None, :, :]
    bordered[:, :, 1:, 1:] = d
    u = np.linalg.det(bordered) / beta
    return GreensKernel(spec=spec, table=u + shifted, u_table=u, beta=beta)


def greens_closed_form(order: Order, j: int, a: float, b: float) -> GreensKernel:
    """
    Closed-form kernel of the (N-1, 1) problem with right condition
    nabla^j x(b) = 0:

        H_{N-1}(t, a-1) H_{nu-j-1}(b, rho(s)) / H_{N-j-1}(b, a-1)

    minus H_{nu-1}(t, rho(s)) once t >= rho(s).
    """
    n = order.n_ceil
    if order.nu <= 1:
        raise InadmissibleSpec(f"closed form needs nu > 1, got {order.nu}")
    if not 0 <= j <= n - 1:
        raise InadmissibleSpec(f"j must lie in 0..{n - 1}, got {j}")
    length = integer_gap(a, b)
    if length < max(1, j):
        raise InadmissibleSpec(f"b - a = {length} must be at least max(1, j) = {max(1, j)}")
    spec = BvpSpec(nu=order.nu, a=a, b=b, k=n - 1, j_orders=(j,))

    t = np.arange(1 - n, length + 1)
    s = np.arange(1, length + 1)
    left = taylor_monomial_array(n - 1, t + 1)
    right = taylor_monomial_array(order.nu - j - 1, length - (s - 1))
    beta = float(taylor_monomial_array(n - j - 1, np.array([length + 1]))[0])
    u = np.outer(left, right) / beta
    return GreensKernel(
        spec=spec,
        table=u - shifted_monomials(order, length),
        u_table=u,
        beta=beta,
        sign=CLOSED_FORM_SIGN,
    )


def solve_via_greens(kernel: GreensKernel, h: GridFunction) -> GridFunction:
    """
    w(t) = sum_{s=a+1}^b G(t, s) h(s) on N_{a-N+1}^b, which solves
    sign * nabla_{a*}^nu w = h with homogeneous boundary data.
    """
    if h.grid.base != kernel.spec.a:
        raise GridMismatch(f"h based at {h.grid.base}, kernel at {kernel.spec.a}")
    s_grid = kernel.s_grid
    if h.lo > s_grid.lo or h.hi < s_grid.hi:
        raise GridMismatch(f"h must cover offsets {s_grid.lo}..{s_grid.hi}, has {h.lo}..{h.hi}")
    return GridFunction(kernel.t_grid, kernel.table @ h.values_on(s_grid.lo, s_grid.hi))


def solve_nonhomogeneous_full(spec: BvpSpec) -> GridFunction:
    """Homogeneous-equation interpolant of the boundary data plus the kernel integral."""
    w = bvp_solve_direct(spec.with_data(rhs=None))
    z = solve_via_greens(greens_kernel(spec), spec.rhs_function())
    return GridFunction(spec.grid, w.values + z.values)
