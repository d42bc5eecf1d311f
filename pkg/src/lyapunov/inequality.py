"""
Lyapunov-type thresholds for nabla^nu_{a*} x(t) + q(t) x(t-1) = 0 on
a+1..b with the boundary conditions

    nabla^{N-2} x(a-1) = 0,  nabla^{N-r} x(b) = 0,
    nabla^i x(c_i) = 0 for i = 0..N-3, c_i in {a-1, b}.

Unknowns are x(a-N+1..b), offsets 1-N..L relative to a.
"""
import csv
import io
import itertools
from enum import Enum
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import solve_triangular

from src.calculus.operators import caputo_operator, difference_weights, frac_sum_weights, nabla_row
from src.calculus.special import taylor_monomial
from src.core.config import get_settings
from src.core.errors import InadmissibleSpec, InconsistentSpec, SamplingBudgetExhausted, SingularSystem
from src.core.grid import Grid, GridFunction, Order, integer_gap
from src.core.logging import get_logger
from src.linalg.dense import is_rank_deficient, null_space, solve_dense
from src.lyapunov.bounds import constant_A

log = get_logger(__name__)

Placement = Literal["left", "right"]

# basis row norm below which a boundary pattern forces x(t) = 0
FORCED_ZERO_TOL = 1e-10


class ThresholdVariant(str, Enum):
    CONJUGATE_A = "conjugate_A"
    FOCAL_H2 = "focal_H2"


class BoundaryPattern(BaseModel):
    """r picks the right condition nabla^{N-r} x(b); placements are c_0..c_{N-3}."""
    model_config = ConfigDict(frozen=True)

    r: Literal[1, 2]
    placements: Tuple[Placement, ...] = ()

    @property
    def variant(self) -> ThresholdVariant:
        return ThresholdVariant.CONJUGATE_A if self.r == 2 else ThresholdVariant.FOCAL_H2

    @property
    def label(self) -> str:
        return f"r{self.r}:" + "".join("L" if c == "left" else "R" for c in self.placements)

    def check(self, n: int) -> "BoundaryPattern":
        if len(self.placements) != n - 2:
            raise InconsistentSpec(f"N = {n} needs {n - 2} placements, got {len(self.placements)}")
        return self


def all_placements(n: int, r: int) -> List[BoundaryPattern]:
    """All 2^{N-2} choices of c_i in {a-1, b}."""
    return [BoundaryPattern(r=r, placements=p) for p in itertools.product(("left", "right"), repeat=n - 2)]


def _check_order(order: Order, a: float, b: float) -> int:
    if order.nu <= 2:
        raise InadmissibleSpec(f"Lyapunov thresholds need nu > 2, got {order.nu}")
    length = integer_gap(a, b)
    if length < order.n_ceil - 1:
        raise InadmissibleSpec(f"b - a = {length} must be at least N - 1 = {order.n_ceil - 1}")
    return length


def _q_values(q: Union[GridFunction, Sequence[float]], length: int) -> np.ndarray:
    if isinstance(q, GridFunction):
        values = q.values_on(1, length)
    else:
        values = np.asarray(q, dtype=float)
    if values.shape != (length,):
        raise InconsistentSpec(f"q needs {length} values on a+1..b, got {values.shape}")
    return values


def q_integral(q: Union[GridFunction, Sequence[float]], length: int) -> float:
    """int_a^b |q(s)| nabla s."""
    return float(np.sum(np.abs(_q_values(q, length))))


def lyapunov_threshold(order: Order, a: float, b: float, variant: ThresholdVariant) -> float:
    length = _check_order(order, a, b)
    n = order.n_ceil
    if ThresholdVariant(variant) is ThresholdVariant.CONJUGATE_A:
        scale = constant_A(order.gamma, a, b)
    else:
        scale = taylor_monomial(2, length, -1)
    return 1.0 / (scale * (length + 1) ** (n - 2))


def boundary_rows(order: Order, length: int, pattern: BoundaryPattern) -> np.ndarray:
    n = order.n_ceil
    pattern.check(n)
    lo, size = 1 - n, length + n
    rows = [nabla_row(n - 2, -1, lo, size), nabla_row(n - pattern.r, length, lo, size)]
    for i, c in enumerate(pattern.placements):
        rows.append(nabla_row(i, -1 if c == "left" else length, lo, size))
    return np.array(rows, dtype=float)


def equation_rows(order: Order, length: int, q: np.ndarray) -> np.ndarray:
    """Caputo rows plus q(t) at the x(t-1) column, t = a+1..b."""
    n = order.n_ceil
    rows = np.array(caputo_operator(order, length))
    idx = np.arange(length)
    rows[idx, idx + n - 1] += q
    return rows


def weighted_system(order: Order, a: float, b: float, q, pattern: BoundaryPattern) -> np.ndarray:
    """Square matrix: equation rows first, then the N boundary rows."""
    length = _check_order(order, a, b)
    return np.vstack([equation_rows(order, length, _q_values(q, length)), boundary_rows(order, length, pattern)])


def check_nontrivial(order: Order, a: float, b: float, q, pattern: BoundaryPattern) -> bool:
    deficient, ratio = is_rank_deficient(weighted_system(order, a, b, q, pattern))
    log.debug("nontrivial check nu=%s pattern=%s ratio=%.3e", order.nu, pattern.label, ratio)
    return deficient


def planting_space(order: Order, length: int, pattern: BoundaryPattern) -> Tuple[np.ndarray, np.ndarray]:
    """
    Orthonormal basis of the x admissible for planting, plus the mask of
    t = a+1..b where the boundary rows force x(t-1) = 0.

    At a forced t, q(t) cannot absorb nabla^nu_{a*} x(t), so the row
    nabla^nu_{a*} x(t) = 0 joins the constraints. Repeats until no new
    zero is forced.
    """
    n = order.n_ceil
    bc = boundary_rows(order, length, pattern)
    op = caputo_operator(order, length)
    forced = np.zeros(length, dtype=bool)
    while True:
        basis = null_space(np.vstack([bc, op[forced]]))
        norms = np.linalg.norm(basis[n - 1:n - 1 + length], axis=1)
        now = forced | (norms < FORCED_ZERO_TOL)
        if basis.shape[1] == 0 or now.all():
            raise SamplingBudgetExhausted(
                f"boundary pattern {pattern.label} leaves no planted solution (nu={order.nu}, b-a={length})"
            )
        if np.array_equal(now, forced):
            return basis, forced
        forced = now


def synth_critical_instance(
    order: Order, a: float, b: float, pattern: BoundaryPattern, seed: int
) -> Tuple[GridFunction, GridFunction]:
    """
    Plant x satisfying the boundary conditions, reject draws with
    |x(t-1)| < min_abs where x(t-1) is free, then set
    q(t) = -nabla^nu_{a*} x(t) / x(t-1). Where the pattern forces
    x(t-1) = 0, x also satisfies nabla^nu_{a*} x(t) = 0 and q(t) is drawn
    from [-1, 1].
    """
    settings = get_settings()
    length = _check_order(order, a, b)
    n = order.n_ceil
    basis, forced = planting_space(order, length, pattern)
    free = ~forced
    op = caputo_operator(order, length)
    rng = np.random.default_rng(seed)
    if forced.any():
        log.debug("pattern %s forces x(t-1) = 0 at t = %s", pattern.label, (np.flatnonzero(forced) + 1).tolist())

    for attempt in range(settings.sampler_budget):
        y = rng.uniform(-1.0, 1.0, size=length + n)
        x = basis @ (basis.T @ y)
        peak = np.max(np.abs(x))
        if peak == 0.0:
            continue
        x = x / peak
        shifted = x[n - 1:n - 1 + length]
        if np.min(np.abs(shifted[free])) < settings.sampler_min_abs:
            continue
        x[n - 1:n - 1 + length][forced] = 0.0
        q = np.empty(length)
        q[free] = -(op @ x)[free] / shifted[free]
        q[forced] = rng.uniform(-1.0, 1.0, size=int(forced.sum()))
        log.debug("planted instance after %d draws (nu=%s, pattern=%s)", attempt + 1, order.nu, pattern.label)
        return GridFunction(Grid(a, 1, length), q), GridFunction(Grid(a, 1 - n, length), x)

    raise SamplingBudgetExhausted(
        f"no planted solution bounded away from zero after {settings.sampler_budget} draws "
        f"(nu={order.nu}, b-a={length}, pattern={pattern.label})"
    )


def uniqueness_sufficient(order: Order, a: float, b: float, q, r: int) -> bool:
    """Strict int |q| < threshold for the variant matching r."""
    if r not in (1, 2):
        raise InadmissibleSpec(f"r must be 1 or 2, got {r}")
    length = _check_order(order, a, b)
    variant = BoundaryPattern(r=r).variant
    return q_integral(q, length) < lyapunov_threshold(order, a, b, variant)


def solve_forced_bvp(
    order: Order,
    a: float,
    b: float,
    q,
    f,
    pattern: BoundaryPattern,
    left_value: float = 0.0,
    right_value: float = 0.0,
    inner_values: Optional[Sequence[float]] = None,
) -> GridFunction:
    """
    Nonhomogeneous weighted problem: equation = f, nabla^{N-2} x(a-1) = A_0,
    nabla^{N-r} x(b) = B_0, nabla^i x(c_i) = C_i.
    """
    length = _check_order(order, a, b)
    n = order.n_ceil
    inner = np.zeros(n - 2) if inner_values is None else np.asarray(inner_values, dtype=float)
    if inner.shape != (n - 2,):
        raise InconsistentSpec(f"need {n - 2} inner boundary values, got {inner.shape}")
    matrix = weighted_system(order, a, b, q, pattern)
    deficient, ratio = is_rank_deficient(matrix)
    if deficient:
        raise SingularSystem(f"homogeneous weighted problem has a nontrivial solution (ratio {ratio:.3e})")
    rhs = np.concatenate([_q_values(f, length), [left_value, right_value], inner])
    return GridFunction(Grid(a, 1 - n, length), solve_dense(matrix, rhs))


def vanishing_forces_trivial(order: Order, a: float, b: float, q) -> bool:
    """
    Whether x = 0 on a..b-1 forces x = 0 everywhere for solutions of the
    weighted equation. False whenever b - a < N.
    """
    if order.nu <= 1:
        raise InadmissibleSpec(f"need nu > 1, got {order.nu}")
    length = integer_gap(a, b)
    n = order.n_ceil
    zeros = np.zeros((length, length + n))
    zeros[np.arange(length), np.arange(length) + n - 1] = 1.0
    stacked = np.vstack([equation_rows(order, length, _q_values(q, length)), zeros])
    deficient, _ = is_rank_deficient(stacked)
    return not deficient


def back_substitute_left_values(order: Order, caputo_values: Sequence[float]) -> np.ndarray:
    """
    x(a-N+1..a-1) from nabla^nu_{a*} x on a+1..a+N-1 when x = 0 on a..a+N-1.

    The Caputo values fix nabla^N x(a+1..a+N-1) through the unit
    lower-triangular sum weights; each nabla^N x(a+k) then exposes one new
    left value x(a+k-N), taken for k = N-1 down to 1.
    """
    n = order.n_ceil
    values = np.asarray(caputo_values, dtype=float)
    if values.shape != (n - 1,):
        raise InconsistentSpec(f"need {n - 1} Caputo values, got {values.shape}")
    weights = frac_sum_weights(n - order.nu, n - 1)
    diffs = solve_triangular(weights, values, lower=True, unit_diagonal=True)
    w = difference_weights(n)
    left = {}
    for k in range(n - 1, 0, -1):
        known = sum(w[i] * left[k - i] for i in range(k + 1, n))
        left[k - n] = (diffs[k - 1] - known) / w[n]
    return np.array([left[o] for o in range(1 - n, 0)])


class LyapunovReport(BaseModel):
    nu: float
    n_ceil: int
    a: float
    b: float
    q: List[float]
    pattern: BoundaryPattern
    q_integral: float
    threshold: float
    threshold_kind: ThresholdVariant
    nontrivial_exists: bool
    inequality_holds: bool
    A_value: float
    gamma: float
    ratio: float = Field(description="q_integral / threshold")
    short_chain: bool = Field(description="N = 3: no iterated integration between the kernel bound and x")

    @property
    def refuted(self) -> bool:
        return self.nontrivial_exists and not self.inequality_holds


def lyapunov_report(order: Order, a: float, b: float, q, pattern: BoundaryPattern) -> LyapunovReport:
    length = _check_order(order, a, b)
    values = _q_values(q, length)
    variant = pattern.variant
    threshold = lyapunov_threshold(order, a, b, variant)
    integral = q_integral(values, length)
    slack = get_settings().soundness_slack * max(1.0, integral, threshold)
    return LyapunovReport(
        nu=order.nu,
        n_ceil=order.n_ceil,
        a=a,
        b=b,
        q=values.tolist(),
        pattern=pattern,
        q_integral=integral,
        threshold=threshold,
        threshold_kind=variant,
        nontrivial_exists=check_nontrivial(order, a, b, values, pattern),
        inequality_holds=integral >= threshold - slack,
        A_value=constant_A(order.gamma, a, b),
        gamma=order.gamma,
        ratio=integral / threshold,
        short_chain=order.n_ceil == 3,
    )


REPORT_CSV_HEADER = ["nu", "N", "a", "b", "pattern", "q_integral", "threshold", "ratio", "nontrivial", "holds"]


def reports_to_csv(reports: Sequence[LyapunovReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_CSV_HEADER)
    for r in reports:
        writer.writerow([
            format(r.nu, ".17g"), r.n_ceil, format(r.a, ".17g"), format(r.b, ".17g"), r.pattern.label,
            format(r.q_integral, ".17g"), format(r.threshold, ".17g"), format(r.ratio, ".17g"),
            str(r.nontrivial_exists).lower(), str(r.inequality_holds).lower(),
        ])
    return buf.getvalue()


def report_to_json(report: LyapunovReport) -> str:
    return report.model_dump_json(indent=2)
