"""
Acceptance harness: property and oracle suites over randomized and
exhaustive sweeps, aggregated into one pass/fail report.

All randomness is spawned from one numpy SeedSequence, one child per
suite and one grandchild per item, so results do not depend on thread
scheduling.
"""
import itertools
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from src.calculus.operators import (
    caputo_diff,
    caputo_operator,
    frac_sum,
    nabla_diff,
    nabla_integral,
    nabla_row,
)
from src.calculus.special import taylor_monomial, taylor_monomial_array, taylor_monomial_exact
from src.core.config import get_settings
from src.core.errors import SamplingBudgetExhausted
from src.core.grid import Grid, GridFunction, Order
from src.greens.kernel import (
    CLOSED_FORM_SIGN,
    greens_closed_form,
    greens_kernel,
    greens_kernel_determinant,
    solve_nonhomogeneous_full,
    solve_via_greens,
)
from src.linalg.dense import equilibrate, null_space, projection_residual
from src.lyapunov.bounds import (
    Side,
    bound_violations,
    constant_A,
    greens_integral,
    greens_integral_brute,
    greens_integral_table,
    max_of_max_violations,
    monomial_property_violations,
)
from src.lyapunov.inequality import (
    ThresholdVariant,
    all_placements,
    back_substitute_left_values,
    check_nontrivial,
    lyapunov_report,
    lyapunov_threshold,
    solve_forced_bvp,
    synth_critical_instance,
    uniqueness_sufficient,
    vanishing_forces_trivial,
    weighted_system,
)
from src.solvers.bvp import (
    BvpSpec,
    basis_matrix,
    boundary_residuals,
    bvp_solve_direct,
    d_entry_closed_form,
    det_D_factorization,
    homogeneous_kernel_dim,
    matrix_D,
    matrix_M,
    vandermonde_check,
)
from src.solvers.ivp import (
    IvpSpec,
    basis_initial_values,
    forward_substitute,
    general_solution_basis,
    ivp_solve,
    weighted_residual,
)

Check = Tuple[str, bool, Optional[str]]
MAX_DETAILS = 5
# floor on |det| of the row-and-column equilibrated D
DET_FLOOR = 1e-8
LYAPUNOV_REDRAWS = 5


class SweepScale(BaseModel):
    operator_instances: int
    ivp_instances: int
    det_max_n: int
    det_max_length: int
    fredholm_max_n: int
    fredholm_max_length: int
    greens_max_n: int
    greens_max_length: int
    greens_draws: int
    closed_form_max_length: int
    bounds_max_length: int
    lyapunov_instances: int
    corollary_instances: int
    uniqueness_instances: int


SCALES: Dict[str, SweepScale] = {
    "quick": SweepScale(
        operator_instances=20, ivp_instances=20,
        det_max_n=4, det_max_length=6, fredholm_max_n=4, fredholm_max_length=5,
        greens_max_n=3, greens_max_length=5, greens_draws=3,
        closed_form_max_length=5, bounds_max_length=6,
        lyapunov_instances=40, corollary_instances=30, uniqueness_instances=20,
    ),
    "full": SweepScale(
        operator_instances=120, ivp_instances=100,
        det_max_n=6, det_max_length=12, fredholm_max_n=5, fredholm_max_length=8,
        greens_max_n=5, greens_max_length=10, greens_draws=20,
        closed_form_max_length=10, bounds_max_length=12,
        lyapunov_instances=520, corollary_instances=220, uniqueness_instances=110,
    ),
}


class SuiteStatistics:
    """Per-suite pass/fail counters, failure samples and telemetry."""

    def __init__(self, seed: int, scale: str):
        self.stats = {
            "seed": seed,
            "scale": scale,
            "suites": [],
            "telemetry": {},
        }
        self.current = None

    def start_suite(self, name: str):
        self.current = {
            "name": name,
            "passed": 0,
            "failed": 0,
            "failure_kinds": {},  # check label -> count
            "details": [],  # first failures only
        }
        self.stats["suites"].append(self.current)
        print(f"\n--- SUITE: {name} ---", file=sys.stderr)

    def log_item(self, label: str, ok: bool, detail: Optional[str] = None):
        if ok:
            self.current["passed"] += 1
            return
        self.current["failed"] += 1
        kinds = self.current["failure_kinds"]
        kinds[label] = kinds.get(label, 0) + 1
        if len(self.current["details"]) < MAX_DETAILS:
            self.current["details"].append({"check": label, "detail": detail})

    def log_checks(self, checks: Iterable[Check]):
        for label, ok, detail in checks:
            self.log_item(label, ok, detail)

    def record(self, key: str, value: Any):
        self.stats["telemetry"][key] = value

    def end_suite(self, elapsed: float):
        s = self.current
        mark = "✅" if s["failed"] == 0 else "❌"
        print(f"   {mark} passed {s['passed']}, failed {s['failed']} ({elapsed:.1f}s)", file=sys.stderr)

    @property
    def passed(self) -> bool:
        return all(s["failed"] == 0 for s in self.stats["suites"])

    def summary(self) -> Dict[str, Any]:
        return {
            **self.stats,
            "total_passed": sum(s["passed"] for s in self.stats["suites"]),
            "total_failed": sum(s["failed"] for s in self.stats["suites"]),
            "ok": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=False)

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_json())
        print(f"\n📊 Statistics saved to {path}", file=sys.stderr)


def _rel_err(got, want) -> float:
    got, want = np.asarray(got, dtype=float), np.asarray(want, dtype=float)
    if got.size == 0:
        return 0.0
    return float(np.max(np.abs(got - want)) / max(1.0, float(np.max(np.abs(want)))))


def _ok(label: str, cond: bool, detail: str = None) -> Check:
    return label, bool(cond), None if cond else detail


def _guarded(fn: Callable[[Any], List[Check]]) -> Callable[[Any], List[Check]]:
    def run(item):
        try:
            return fn(item)
        except Exception as e:
            return [("crash", False, f"{type(e).__name__}: {e} (item {item!r})"[:300])]
    return run


def _map(fn, items: Sequence, parallel: bool) -> List:
    threads = get_settings().threads
    if not parallel or threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _item_seeds(root: np.random.SeedSequence, count: int) -> List[np.random.SeedSequence]:
    return root.spawn(count)


def _random_order(rng: np.random.Generator, lo: float = 0.0, hi: float = 5.0) -> Order:
    if rng.random() < 0.2:
        return Order(float(rng.integers(max(1, int(np.floor(lo)) + 1), int(hi) + 1)))
    return Order(float(rng.uniform(lo, hi)) or hi)


def _j_subsets(n: int, k: int) -> List[Tuple[int, ...]]:
    return list(itertools.combinations(range(n), n - k))


def _admissible_lengths(n: int, k: int, j: Tuple[int, ...], max_length: int) -> range:
    return range(max(1, j[-1] - n + k + 1), max_length + 1)


def _orders_for(n: int) -> List[float]:
    return [n - 0.7, n - 0.3, float(n)]


# ---------------------------------------------------------------- operators

def _leibniz_sides(table: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Both sides of nabla_t int_a^t f(t, tau) = int_a^t nabla_t f(t, tau) + f(rho(t), t)
    for a = 0 and f(t, tau) = table[t, tau - 1], t = 0..L, tau = 1..L.
    """
    length = table.shape[1]
    tau = Grid(0.0, 1, length)
    rows = [GridFunction(tau, row) for row in table]
    F = GridFunction(Grid(0.0, 0, length), [nabla_integral(rows[t], 0, t) for t in range(length + 1)])
    lhs = nabla_diff(F, 1).values
    rhs = np.array([
        nabla_integral(GridFunction(tau, rows[t].values - rows[t - 1].values), 0, t) + rows[t - 1](t)
        for t in range(1, length + 1)
    ])
    return lhs, rhs


def _leibniz_checks(rng: np.random.Generator, length: int, tol: float) -> List[Check]:
    lhs, rhs = _leibniz_sides(rng.uniform(-1, 1, size=(length + 1, length)))
    err = _rel_err(lhs, rhs)
    checks = [_ok("leibniz", err < tol, f"L={length} err={err:.3e}")]

    # eighths are exact in binary, so the operator result must equal the rational one
    table = [[Fraction(int(v), 8) for v in row] for row in rng.integers(-64, 65, size=(length + 1, length))]
    lhs, _ = _leibniz_sides(np.array(table, dtype=float))
    want = [
        sum((table[t][s] - table[t - 1][s] for s in range(t)), Fraction(0)) + table[t - 1][t - 1]
        for t in range(1, length + 1)
    ]
    checks.append(_ok("leibniz_exact", [Fraction(v) for v in lhs] == want, f"L={length}"))
    return checks


def _operator_item(seed: np.random.SeedSequence) -> List[Check]:
    rng = np.random.default_rng(seed)
    order = _random_order(rng, 0.0, 5.0)
    mu, n = order.nu, order.n_ceil
    length = int(rng.integers(1, 21))
    tol = get_settings().rel_tol
    checks = []

    d = np.arange(0, length + 1)
    h_mu = taylor_monomial_array(mu, d)
    checks.append(_ok("monomial_vanishes_at_base", h_mu[0] == 0.0, f"H_{mu}(a,a) = {h_mu[0]}"))
    checks.append(_ok("monomial_order_zero", np.all(taylor_monomial_array(0, d) == 1.0), "H_0 != 1"))
    err = _rel_err(np.diff(h_mu), taylor_monomial_array(mu - 1, d[1:]))
    checks.append(_ok("monomial_difference", err < tol, f"nu={mu} err={err:.3e}"))
    err = _rel_err(np.cumsum(h_mu[1:]), taylor_monomial_array(mu + 1, d[1:]))
    checks.append(_ok("monomial_integral", err < tol, f"nu={mu} err={err:.3e}"))
    ones = GridFunction(Grid(0.0, 1, length), np.ones(length))
    err = _rel_err(frac_sum(ones, mu + 1, 0).values, taylor_monomial_array(mu + 1, d[1:]))
    checks.append(_ok("monomial_kernel_integral", err < tol, f"nu={mu} err={err:.3e}"))
    k = int(rng.integers(1, 4))
    exact_zero = all(taylor_monomial_exact(-k, t, 0) == 0 for t in range(k + 1, k + 1 + length))
    float_zero = np.all(taylor_monomial_array(-k, np.arange(k + 1, k + 1 + length)) == 0.0)
    checks.append(_ok("negative_integer_vanishing", exact_zero and float_zero, f"k={k}"))

    big = rng.integers(-50, 51, size=length + 1).astype(float)
    F = GridFunction(Grid(0.0, 0, length), big)
    f = nabla_diff(F, 1)
    checks.append(_ok("ftnc", nabla_integral(f, 0, length) == F(length) - F(0), "FTNC mismatch"))
    checks.append(_ok("ftnc_reversed", nabla_integral(f, length, 0) == F(0) - F(length), "reversed FTNC mismatch"))

    checks.extend(_leibniz_checks(rng, length, tol))

    x = GridFunction(Grid(0.0, 0, length + n), rng.integers(-30, 31, size=length + n + 1).astype(float))
    for m in range(n + 1):
        direct = nabla_diff(x, m)
        size = len(x)
        binomial = [float(nabla_row(m, t, 0, size) @ x.values) for t in direct.grid.offsets]
        if not np.array_equal(direct.values, binomial):
            checks.append(("binomial_difference", False, f"order {m}"))
            break
    else:
        checks.append(("binomial_difference", True, None))

    if order.is_integer:
        h = GridFunction(Grid(0.0, 1, length), rng.integers(-9, 10, size=length).astype(float))
    else:
        h = GridFunction(Grid(0.0, 1, length), rng.uniform(-1, 1, size=length))
    lifted = frac_sum(h, mu, 0, extended=True).extend_with_zeros(1 - n)
    back = caputo_diff(lifted, order, 0)
    if order.is_integer and np.max(np.abs(lifted.values)) < 2 ** 52:
        checks.append(_ok("composition_exact", np.array_equal(back.values, h.values), f"nu={mu}"))
    else:
        err = _rel_err(back.values, h.values)
        checks.append(_ok("composition", err < tol, f"nu={mu} L={length} err={err:.3e}"))
    return checks


def suite_operator_identities(stats, scale: SweepScale, root, parallel: bool):
    results = _map(_guarded(_operator_item), _item_seeds(root, scale.operator_instances), parallel)
    for checks in results:
        stats.log_checks(checks)


# ---------------------------------------------------------------- IVPs

def _ivp_spot_checks() -> List[Check]:
    checks = []
    x = ivp_solve(IvpSpec(nu=1.5, b=4, rhs=(0.0,) * 4, initial_values=(1.0, 2.0)))
    want = [1 + 2 * t for t in x.grid.offsets]
    checks.append(_ok("ivp_linear_example", _rel_err(x.values, want) < 1e-12, str(x.values)))
    x = ivp_solve(IvpSpec(nu=1.5, b=3, rhs=(1.0, 0.0, 0.0), initial_values=(0.0, 0.0)))
    checks.append(_ok("ivp_impulse_example", abs(x(2) - 1.5) < 1e-12, f"x(a+2) = {x(2)}"))
    return checks


def _ivp_item(seed: np.random.SeedSequence) -> List[Check]:
    rng = np.random.default_rng(seed)
    order = _random_order(rng, 0.0, 5.0)
    n = order.n_ceil
    length = int(rng.integers(1, 13))
    grid = Grid(0.0, 1 - n, length)
    checks = []

    basis = general_solution_basis(order, 0, grid)
    worst = max(float(np.max(np.abs(caputo_diff(b, order, 0).values))) for b in basis)
    checks.append(_ok("basis_annihilated", worst < 1e-9, f"nu={order.nu} max={worst:.3e}"))
    zeros_ok = all(np.all(b.values[:p] == 0.0) for p, b in enumerate(basis))
    checks.append(_ok("basis_consecutive_zeros", zeros_ok, f"N={n}"))

    v = basis_initial_values(n)
    closed = [
        [Fraction(math.factorial(n - i - 1), math.factorial(n - p - 1) * math.factorial(p - i)) if i <= p else 0
         for p in range(n)]
        for i in range(n)
    ]
    checks.append(_ok("basis_initial_values", v == closed, f"N={n}"))

    c = rng.uniform(-1, 1, size=n)
    h = rng.uniform(-1, 1, size=length)
    x = ivp_solve(IvpSpec(nu=order.nu, b=length, rhs=tuple(h), initial_values=tuple(c)))
    got = [float(nabla_row(i, 0, 1 - n, len(grid)) @ x.values) for i in range(n)]
    checks.append(_ok("ivp_initial_values", _rel_err(got, c) < 1e-9, f"{got} vs {c}"))
    err = _rel_err(caputo_diff(x, order, 0).values, h)
    checks.append(_ok("ivp_equation", err < 1e-9, f"nu={order.nu} err={err:.3e}"))

    A = rng.uniform(-1, 1, size=n)
    q = rng.uniform(-1, 1, size=length)
    spec = IvpSpec(nu=order.nu, b=length, rhs=tuple(h), point_values=tuple(A), potential=tuple(q))
    x = forward_substitute(spec)
    checks.append(_ok("point_values_exact", all(x(-i) == A[i] for i in range(n)), "initial points moved"))
    res = weighted_residual(order, x, q, h)
    err = float(np.max(np.abs(res))) / max(1.0, float(np.max(np.abs(x.values))))
    checks.append(_ok("weighted_ivp_residual", err < 1e-9, f"nu={order.nu} err={err:.3e}"))

    if order.nu > 1 and n >= 2:
        k = int(rng.integers(1, n))
        length_k = max(length, k)
        spec = BvpSpec(nu=order.nu, b=length_k, k=k, j_orders=tuple(range(k, n)))
        left = np.array(matrix_M(spec)[:k], dtype=float)
        z = null_space(left)
        coeffs = z @ rng.uniform(-1, 1, size=z.shape[1])
        full = basis_matrix(n, length_k)
        y = full @ coeffs
        start = [float(nabla_row(i, 0, 1 - n, len(y)) @ y) for i in range(n)]
        sol = ivp_solve(IvpSpec(nu=order.nu, b=length_k, rhs=(0.0,) * length_k, initial_values=tuple(start)))
        residual = projection_residual(full[:, k:], sol.values)
        checks.append(_ok("left_conditions_span", residual < 1e-10, f"k={k} residual={residual:.3e}"))
    return checks


def suite_ivp_basis(stats, scale: SweepScale, root, parallel: bool):
    stats.log_checks(_ivp_spot_checks())
    for checks in _map(_guarded(_ivp_item), _item_seeds(root, scale.ivp_instances), parallel):
        stats.log_checks(checks)


# ---------------------------------------------------------------- det D

def _det_spot_checks() -> List[Check]:
    spec = BvpSpec(nu=2.5, b=3, k=1, j_orders=(0, 1))
    d = matrix_D(spec)
    checks = [
        _ok("D_example", d == [[5, 10], [1, 4]], str(d)),
        _ok("D_example_det", det_D_factorization(spec).det_D == 10, "det != 10"),
        _ok("vandermonde_01", vandermonde_check(spec) == 1, "det E != 1"),
        _ok("vandermonde_012", vandermonde_check(BvpSpec(nu=4, b=3, k=1, j_orders=(0, 1, 2))) == 2, "det E != 2"),
    ]
    return checks


def _det_item(item, fredholm: Tuple[int, int], seed: np.random.SeedSequence) -> List[Check]:
    n, k, j, length = item
    checks = []
    for nu in _orders_for(n):
        spec = BvpSpec(nu=nu, b=length, k=k, j_orders=j)
        tag = f"N={n} k={k} j={j} L={length} nu={nu}"
        fac = det_D_factorization(spec)
        checks.append(_ok("det_D_nonzero", fac.det_D != 0, tag))
        eq = abs(np.linalg.det(equilibrate(np.array(matrix_D(spec), dtype=float))))
        checks.append(_ok("det_D_equilibrated", eq > DET_FLOOR, f"{tag} det={eq:.3e}"))
        checks.append(_ok("det_D_factorization", fac.holds, tag))
        closed = [[d_entry_closed_form(length, n, p, jm) for p in range(k, n)] for jm in j]
        checks.append(_ok("D_closed_form_entries", closed == matrix_D(spec), tag))

        if n <= fredholm[0] and length <= fredholm[1]:
            rng = np.random.default_rng(seed.spawn(1)[0])
            checks.append(_ok("fredholm_kernel_trivial", homogeneous_kernel_dim(spec) == 0, tag))
            data = spec.with_data(
                left_values=tuple(rng.uniform(-1, 1, size=k)),
                right_values=tuple(rng.uniform(-1, 1, size=n - k)),
                rhs=tuple(rng.uniform(-1, 1, size=length)),
            )
            x = bvp_solve_direct(data)
            scale = max(1.0, float(np.max(np.abs(x.values))))
            worst = max(boundary_residuals(data, x).values()) / scale
            checks.append(_ok("fredholm_solvable", worst < 1e-9, f"{tag} residual={worst:.3e}"))
    return checks


def suite_det_D(stats, scale: SweepScale, root, parallel: bool):
    stats.log_checks(_det_spot_checks())
    items = [
        (n, k, j, length)
        for n in range(2, scale.det_max_n + 1)
        for k in range(1, n)
        for j in _j_subsets(n, k)
        for length in _admissible_lengths(n, k, j, scale.det_max_length)
    ]
    seeds = _item_seeds(root, len(items))
    fredholm = (scale.fredholm_max_n, scale.fredholm_max_length)
    run = _guarded(lambda pair: _det_item(pair[0], fredholm, pair[1]))
    for checks in _map(run, list(zip(items, seeds)), parallel):
        stats.log_checks(checks)
    stats.record("det_D_specs", len(items) * 3)


# ---------------------------------------------------------------- Green's functions

def _greens_item(pair, draws: int) -> List[Check]:
    (nu, k, j, length), seed = pair
    rng = np.random.default_rng(seed)
    spec = BvpSpec(nu=nu, b=length, k=k, j_orders=j)
    n = spec.n_ceil
    tag = f"nu={nu} k={k} j={j} L={length}"
    kernel = greens_kernel(spec)
    checks = []

    det_kernel = greens_kernel_determinant(spec)
    err = _rel_err(det_kernel.table, kernel.table)
    checks.append(_ok("determinant_expansion", err < 1e-9, f"{tag} err={err:.3e}"))

    lo, size = 1 - n, length + n
    scale = max(1.0, float(np.max(np.abs(kernel.table))))
    left = max(
        float(np.max(np.abs(nabla_row(i, spec.alpha, lo, size) @ kernel.table))) for i in range(k)
    )
    checks.append(_ok("kernel_left_conditions", left / scale < 1e-9, f"{tag} {left:.3e}"))
    right = max(float(np.max(np.abs(nabla_row(jm, length, lo, size) @ kernel.table))) for jm in j)
    checks.append(_ok("kernel_right_conditions", right / scale < 1e-9, f"{tag} {right:.3e}"))
    rows = np.arange(length) + n - 1  # t = rho(s) = s - 1
    cols = np.arange(length)
    checks.append(_ok(
        "branch_overlap",
        np.array_equal(kernel.table[rows, cols], kernel.u_table[rows, cols]),
        tag,
    ))

    s_grid = Grid(0.0, 1, length)
    for _ in range(draws):
        h = rng.uniform(-1, 1, size=length)
        homogeneous = spec.with_data(rhs=tuple(h))
        direct = bvp_solve_direct(homogeneous)
        w = solve_via_greens(kernel, GridFunction(s_grid, h))
        err = _rel_err(w.values, direct.values)
        checks.append(_ok("greens_vs_direct", err < 1e-9, f"{tag} err={err:.3e}"))
        eq = _rel_err(caputo_diff(w, spec.order, 0).values, h)
        checks.append(_ok("greens_equation", eq < 1e-9, f"{tag} err={eq:.3e}"))

        full = spec.with_data(
            left_values=tuple(rng.uniform(-1, 1, size=k)),
            right_values=tuple(rng.uniform(-1, 1, size=n - k)),
            rhs=tuple(h),
        )
        err = _rel_err(solve_nonhomogeneous_full(full).values, bvp_solve_direct(full).values)
        checks.append(_ok("full_vs_direct", err < 1e-9, f"{tag} err={err:.3e}"))
    return checks


def suite_greens(stats, scale: SweepScale, root, parallel: bool):
    items = [
        (nu, k, j, length)
        for n in range(2, scale.greens_max_n + 1)
        for nu in _orders_for(n)
        for k in range(1, n)
        for j in _j_subsets(n, k)
        for length in _admissible_lengths(n, k, j, scale.greens_max_length)
    ]
    seeds = _item_seeds(root, len(items))
    run = _guarded(lambda pair: _greens_item(pair, scale.greens_draws))
    for checks in _map(run, list(zip(items, seeds)), parallel):
        stats.log_checks(checks)
    stats.record("greens_specs", len(items))


# ---------------------------------------------------------------- closed form

CLOSED_FORM_ORDERS = (1.3, 1.5, 2.0, 2.5, 3.7)


def _closed_form_spot_checks() -> List[Check]:
    closed = greens_closed_form(Order(2.0), 0, 0.0, 3.0)
    det = greens_kernel_determinant(BvpSpec(nu=2.0, b=3, k=1, j_orders=(0,)))
    want = [[(t + 1) * (4 - s) / 4 for s in range(1, 4)] for t in range(-1, 4)]
    on_u_branch = all(abs(closed(t, s) - want[t + 1][s - 1]) < 1e-12 for t in range(-1, 4) for s in range(1, 4) if t <= s - 1)
    return [
        _ok("closed_form_G12", abs(closed(1, 2) - 1.0) < 1e-12, f"G(1,2) = {closed(1, 2)}"),
        _ok("determinant_G12", abs(det(1, 2) + 1.0) < 1e-12, f"G(1,2) = {det(1, 2)}"),
        _ok("closed_form_formula", on_u_branch, "(t+1)(4-s)/4 mismatch"),
        _ok("closed_form_left_zero", all(closed(-1, s) == 0.0 for s in range(1, 4)), "G(a-1, s) != 0"),
    ]


def _closed_form_item(item) -> List[Check]:
    nu, j, length = item
    order = Order(nu)
    closed = greens_closed_form(order, j, 0.0, float(length))
    spec = BvpSpec(nu=nu, b=length, k=order.n_ceil - 1, j_orders=(j,))
    tag = f"nu={nu} j={j} L={length}"
    det = greens_kernel_determinant(spec)
    solved = greens_kernel(spec)
    err_det = _rel_err(closed.table, CLOSED_FORM_SIGN * det.table)
    err_solved = _rel_err(closed.table, CLOSED_FORM_SIGN * solved.table)
    return [
        _ok("closed_vs_determinant", err_det < 1e-10, f"{tag} err={err_det:.3e}"),
        _ok("closed_vs_solved", err_solved < 1e-10, f"{tag} err={err_solved:.3e}"),
    ]


def suite_closed_form(stats, scale: SweepScale, root, parallel: bool):
    stats.log_checks(_closed_form_spot_checks())
    items = [
        (nu, j, length)
        for nu in CLOSED_FORM_ORDERS
        for j in range(Order(nu).n_ceil)
        for length in range(max(1, j), scale.closed_form_max_length + 1)
    ]
    for checks in _map(_guarded(_closed_form_item), items, parallel):
        stats.log_checks(checks)


# ---------------------------------------------------------------- kernel integral bounds

BOUND_GAMMAS = (1.1, 1.5, 1.9, 2.0)
MONOMIAL_ALPHAS = (-0.9, -0.5, -0.2, 0.0, 0.3, 0.5, 1.0, 1.5, 2.0, 2.5, 3.7)


def _bounds_spot_checks() -> List[Check]:
    a1 = constant_A(1.5, 0, 4)
    a2 = constant_A(2.0, 0, 3)
    first = taylor_monomial(0.5, 4, 0) / 5 * 15
    return [
        _ok("A_example_1.5", abs(a1 - 6.5625) < 1e-12, f"A = {a1}"),
        _ok("A_terms_coincide", abs(first - taylor_monomial(1.5, 4, 0)) < 1e-12, "terms differ"),
        _ok("A_example_2", abs(a2 - 7.5) < 1e-12, f"A = {a2}"),
    ]


def _bounds_item(item) -> List[Check]:
    gamma, j, length = item
    tag = f"gamma={gamma} j={j} L={length}"
    checks = []
    bad = bound_violations(gamma, j, 0.0, float(length))
    checks.append(_ok("integral_bound", not bad, f"{tag} {bad[:1]}"))
    for side in Side:
        table = greens_integral_table(gamma, j, 0.0, float(length), side)
        brute = greens_integral_brute(gamma, j, 0.0, float(length), side)
        err = _rel_err(table, brute)
        checks.append(_ok(f"integral_brute_{side.value}", err < 1e-10, f"{tag} err={err:.3e}"))
        point = greens_integral(gamma, j, 0.0, float(length), length // 2, max(1, length // 2), side)
        ref = table[length // 2 + 1, max(1, length // 2) - 1]
        checks.append(_ok(f"integral_pointwise_{side.value}", abs(point - ref) <= 1e-12 * max(1.0, abs(ref)), tag))
    left = greens_integral_table(gamma, j, 0.0, float(length), Side.LEFT)
    checks.append(_ok("integral_empty_range", np.all(left[0] == 0.0), tag))
    bad = max_of_max_violations(gamma, j, 0.0, float(length))
    checks.append(_ok("max_of_max", not bad, f"{tag} {bad[:1]}"))
    return checks


def suite_kernel_bounds(stats, scale: SweepScale, root, parallel: bool):
    stats.log_checks(_bounds_spot_checks())
    bad = monomial_property_violations(MONOMIAL_ALPHAS, scale.bounds_max_length)
    stats.log_item("monomial_properties", not bad, str(bad[:2]))
    items = [(g, j, length) for g in BOUND_GAMMAS for j in (0, 1) for length in range(1, scale.bounds_max_length + 1)]
    for checks in _map(_guarded(_bounds_item), items, parallel):
        stats.log_checks(checks)


# ---------------------------------------------------------------- Lyapunov soundness

def _random_weighted_setup(rng: np.random.Generator, index: int, n: Optional[int] = None, r: Optional[int] = None):
    n = int(rng.integers(3, 6)) if n is None else n
    order = Order(n - float(rng.uniform(0.0, 1.0)))
    if order.n_ceil != n:  # a draw of exactly 1 lands on N - 1
        order = Order(float(n))
    length = int(rng.integers(n - 1, 13))
    r = int(rng.integers(1, 3)) if r is None else r
    patterns = all_placements(n, r)
    return order, length, patterns[index % len(patterns)]


def _lyapunov_item(pair) -> Tuple[List[Check], Optional[Tuple[str, float, int]]]:
    index, seed = pair
    rng = np.random.default_rng(seed)
    order, length, pattern = _random_weighted_setup(rng, index)
    # a pattern that forces x(b-1) = 0 can leave x(a) nearly zero for some (nu, b-a); redraw those
    for redraws in range(LYAPUNOV_REDRAWS):
        tag = f"nu={order.nu:.6g} L={length} {pattern.label}"
        try:
            q, x = synth_critical_instance(order, 0.0, float(length), pattern, int(rng.integers(1 << 31)))
            break
        except SamplingBudgetExhausted as e:
            failure = f"{tag} {e}"
            order, length, pattern = _random_weighted_setup(rng, index, order.n_ceil, pattern.r)
    else:
        return [("sampler_budget", False, failure)], None
    report = lyapunov_report(order, 0.0, float(length), q, pattern)
    res = weighted_residual(order, x, q.values, np.zeros(length))
    checks = [
        _ok("planted_residual", float(np.max(np.abs(res))) < 1e-10 * max(1.0, float(np.max(np.abs(q.values)))), tag),
        _ok("planted_detected", report.nontrivial_exists, tag),
        _ok("lyapunov_soundness", not report.refuted, f"{tag} ratio={report.ratio:.6g}"),
    ]
    return checks, (f"N={order.n_ceil},r={pattern.r}", report.ratio, redraws)


def suite_lyapunov(stats, scale: SweepScale, root, parallel: bool):
    order = Order(2.5)
    t1 = lyapunov_threshold(order, 0, 4, ThresholdVariant.CONJUGATE_A)
    t2 = lyapunov_threshold(order, 0, 4, ThresholdVariant.FOCAL_H2)
    stats.log_item("threshold_conjugate_example", abs(t1 - 16 / 525) < 1e-14, f"{t1}")
    stats.log_item("threshold_focal_example", abs(t2 - 1 / 75) < 1e-14, f"{t2}")

    seeds = _item_seeds(root, scale.lyapunov_instances)
    results = _map(_guarded_pair(_lyapunov_item), list(enumerate(seeds)), parallel)
    tightness: Dict[str, float] = {}
    redrawn = 0
    for checks, outcome in results:
        stats.log_checks(checks)
        if outcome is not None:
            key, value, redraws = outcome
            tightness[key] = min(tightness.get(key, float("inf")), value)
            redrawn += redraws
    stats.record("lyapunov_min_ratio", {k: tightness[k] for k in sorted(tightness)})
    stats.record("lyapunov_setup_redraws", redrawn)


def _guarded_pair(fn):
    def run(item):
        try:
            return fn(item)
        except Exception as e:
            return [("crash", False, f"{type(e).__name__}: {e}"[:300])], None
    return run


# ---------------------------------------------------------------- corollary

def _corollary_item(pair) -> List[Check]:
    index, seed = pair
    rng = np.random.default_rng(seed)
    order, length, pattern = _random_weighted_setup(rng, index)
    n = order.n_ceil
    tag = f"nu={order.nu:.6g} L={length} {pattern.label}"
    threshold = lyapunov_threshold(order, 0.0, float(length), pattern.variant)
    q = rng.uniform(-1, 1, size=length)
    q *= rng.uniform(0.05, 0.95) * threshold / np.sum(np.abs(q))
    sufficient = uniqueness_sufficient(order, 0.0, float(length), q, pattern.r)
    checks = [_ok("under_threshold_sufficient", sufficient, tag)]
    if not sufficient:
        return checks
    checks.append(_ok("contrapositive", not check_nontrivial(order, 0.0, float(length), q, pattern), tag))
    f = rng.uniform(-1, 1, size=length)
    bc = rng.uniform(-1, 1, size=n)
    x = solve_forced_bvp(order, 0.0, float(length), q, f, pattern, bc[0], bc[1], bc[2:])
    rhs = np.concatenate([f, bc])
    res = weighted_system(order, 0.0, float(length), q, pattern) @ x.values - rhs
    err = float(np.max(np.abs(res))) / max(1.0, float(np.max(np.abs(x.values))))
    checks.append(_ok("forced_bvp_residual", err < 1e-9, f"{tag} err={err:.3e}"))
    return checks


def suite_corollary(stats, scale: SweepScale, root, parallel: bool):
    seeds = _item_seeds(root, scale.corollary_instances)
    for checks in _map(_guarded(_corollary_item), list(enumerate(seeds)), parallel):
        stats.log_checks(checks)


# ---------------------------------------------------------------- IVP uniqueness, vanishing

def _uniqueness_item(seed) -> Tuple[List[Check], int]:
    rng = np.random.default_rng(seed)
    order = _random_order(rng, 1.0, 5.0)
    n = order.n_ceil
    length = int(rng.integers(1, 13))
    tag = f"nu={order.nu:.6g} L={length}"
    q = rng.uniform(-2, 2, size=length)
    spec = IvpSpec(
        nu=order.nu, b=length,
        rhs=tuple(rng.uniform(-1, 1, size=length)),
        point_values=tuple(rng.uniform(-1, 1, size=n)),
        potential=tuple(q),
    )
    first, second = forward_substitute(spec), forward_substitute(spec)
    checks = [_ok("ivp_bit_identical", np.array_equal(first.values, second.values), tag)]

    counterexamples = 0
    trivial = vanishing_forces_trivial(order, 0.0, float(length), q)
    if length >= n:
        checks.append(_ok("vanishing_forces_trivial", trivial, tag))
    elif length == n - 1:
        # one interior point short: a nonzero solution vanishing on a..b-1 exists
        checks.append(_ok("short_interval_nontrivial", not trivial, tag))
        counterexamples += int(not trivial)

    if n >= 2:
        left = rng.uniform(-1, 1, size=n - 1)
        x = np.concatenate([left, np.zeros(n)])
        values = caputo_operator(order, n - 1) @ x
        got = back_substitute_left_values(order, values)
        checks.append(_ok("back_substitution_replay", _rel_err(got, left) < 1e-9, tag))
        zeros = back_substitute_left_values(order, np.zeros(n - 1))
        checks.append(_ok("back_substitution_forced_zeros", np.all(zeros == 0.0), tag))
    return checks, counterexamples


def suite_uniqueness(stats, scale: SweepScale, root, parallel: bool):
    seeds = _item_seeds(root, scale.uniqueness_instances)
    results = _map(_guarded_pair(_uniqueness_item), seeds, parallel)
    found = 0
    for checks, count in results:
        stats.log_checks(checks)
        found += count or 0
    stats.record("short_interval_counterexamples", found)


SUITES = [
    ("operator_identities", suite_operator_identities),
    ("ivp_basis", suite_ivp_basis),
    ("det_D", suite_det_D),
    ("greens_correctness", suite_greens),
    ("closed_form", suite_closed_form),
    ("kernel_integral_bounds", suite_kernel_bounds),
    ("lyapunov_soundness", suite_lyapunov),
    ("corollary_consistency", suite_corollary),
    ("ivp_uniqueness", suite_uniqueness),
]


def run_verification(seed: int, scale: str = "full", parallel: bool = False,
                     only: Optional[Sequence[str]] = None) -> SuiteStatistics:
    """Run every suite (or the named ones) and return the aggregated statistics."""
    sweep = SCALES[scale]
    stats = SuiteStatistics(seed, scale)
    children = np.random.SeedSequence(seed).spawn(len(SUITES))
    print(f"🚀 verify: seed={seed} scale={scale} parallel={parallel}", file=sys.stderr)
    for (name, suite), child in zip(SUITES, children):
        if only and name not in only:
            continue
        stats.start_suite(name)
        started = time.perf_counter()
        suite(stats, sweep, child, parallel)
        stats.end_suite(time.perf_counter() - started)
    return stats
