import csv
import io
import json
import os
import sys

import numpy as np
import pytest
from pydantic import ValidationError

# Add project root to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.calculus.operators import caputo_diff, nabla_row
from src.core.errors import GridMismatch, InadmissibleSpec
from src.core.grid import Grid, GridFunction, Order
from src.greens.export import kernel_to_csv, kernel_to_dict, kernel_to_json
from src.greens.kernel import (
    CLOSED_FORM_SIGN,
    greens_closed_form,
    greens_kernel,
    greens_kernel_determinant,
    shifted_monomials,
    solve_nonhomogeneous_full,
    solve_via_greens,
)
from src.solvers.bvp import BvpSpec, bvp_solve_direct

SPECS = [
    BvpSpec(nu=1.5, b=4, k=1, j_orders=(0,)),
    BvpSpec(nu=2.0, b=3, k=1, j_orders=(1,)),
    BvpSpec(nu=2.5, b=4, k=2, j_orders=(0,)),
    BvpSpec(nu=2.5, b=5, k=1, j_orders=(1, 2)),
    BvpSpec(nu=3.4, b=6, k=2, j_orders=(0, 3)),
]


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def test_spot_value_of_closed_form():
    g = greens_closed_form(Order(2.0), 0, 0.0, 3.0)
    assert g(1, 2) == pytest.approx(1.0)
    assert g.sign == CLOSED_FORM_SIGN


def test_spot_value_of_determinant_kernel():
    g = greens_kernel_determinant(BvpSpec(nu=2.0, b=3, k=1, j_orders=(0,)))
    assert g(1, 2) == pytest.approx(-1.0)


def test_closed_form_formula_for_order_two():
    g = greens_closed_form(Order(2.0), 0, 0.0, 3.0)
    for s in range(1, 4):
        for t in range(-1, s):
            assert g(t, s) == pytest.approx((t + 1) * (4 - s) / 4)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"nu{s.nu}-k{s.k}-j{s.j_orders}")
def test_kernel_paths_agree(spec):
    solved = greens_kernel(spec)
    det = greens_kernel_determinant(spec)
    np.testing.assert_allclose(solved.table, det.table, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"nu{s.nu}-k{s.k}-j{s.j_orders}")
def test_kernel_meets_homogeneous_boundary_conditions(spec):
    g = greens_kernel(spec)
    n, length = spec.n_ceil, spec.length
    lo, size = 1 - n, length + n
    for i in range(spec.k):
        assert np.max(np.abs(nabla_row(i, spec.alpha, lo, size) @ g.table)) < 1e-10
    for j in spec.j_orders:
        assert np.max(np.abs(nabla_row(j, length, lo, size) @ g.table)) < 1e-10


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"nu{s.nu}-k{s.k}-j{s.j_orders}")
def test_greens_solution_matches_direct(spec, rng):
    h = rng.uniform(-1, 1, size=spec.length)
    kernel = greens_kernel(spec)
    w = solve_via_greens(kernel, GridFunction(Grid(0.0, 1, spec.length), h))
    direct = bvp_solve_direct(spec.with_data(rhs=tuple(h)))
    np.testing.assert_allclose(w.values, direct.values, rtol=1e-9, atol=1e-10)
    np.testing.assert_allclose(caputo_diff(w, spec.order, 0).values, h, rtol=1e-9, atol=1e-10)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"nu{s.nu}-k{s.k}-j{s.j_orders}")
def test_full_solution_matches_direct(spec, rng):
    full = spec.with_data(
        left_values=tuple(rng.uniform(-1, 1, size=spec.k)),
        right_values=tuple(rng.uniform(-1, 1, size=len(spec.j_orders))),
        rhs=tuple(rng.uniform(-1, 1, size=spec.length)),
    )
    np.testing.assert_allclose(
        solve_nonhomogeneous_full(full).values, bvp_solve_direct(full).values, rtol=1e-9, atol=1e-10
    )


@pytest.mark.parametrize("nu", [1.3, 1.5, 2.0, 2.5, 3.7])
def test_closed_form_is_negated_determinant_kernel(nu):
    order = Order(nu)
    for j in range(order.n_ceil):
        for length in range(max(1, j), 8):
            closed = greens_closed_form(order, j, 0.0, float(length))
            det = greens_kernel_determinant(BvpSpec(nu=nu, b=length, k=order.n_ceil - 1, j_orders=(j,)))
            np.testing.assert_allclose(closed.table, CLOSED_FORM_SIGN * det.table, rtol=1e-10, atol=1e-12)


def test_branches_meet_on_the_diagonal():
    g = greens_kernel(SPECS[3])
    n = SPECS[3].n_ceil
    for s in range(1, SPECS[3].length + 1):
        row = s - 1 - (1 - n)
        assert g.table[row, s - 1] == g.u_table[row, s - 1]


def test_shifted_monomials_vanish_left_of_the_diagonal():
    table = shifted_monomials(Order(2.5), 4)
    # rows t = -2..4, columns s = 1..4
    for col, s in enumerate(range(1, 5)):
        for row, t in enumerate(range(-2, 5)):
            if t < s - 1:
                assert table[row, col] == 0.0


def test_closed_form_rejects_bad_parameters():
    with pytest.raises(InadmissibleSpec):
        greens_closed_form(Order(0.8), 0, 0.0, 3.0)
    with pytest.raises(InadmissibleSpec):
        greens_closed_form(Order(2.5), 3, 0.0, 3.0)
    with pytest.raises(InadmissibleSpec):
        greens_closed_form(Order(3.5), 2, 0.0, 1.0)


def test_inadmissible_spec_never_builds_a_kernel():
    with pytest.raises(ValidationError):
        greens_kernel(BvpSpec(nu=2.5, b=3, k=0, j_orders=(0, 1, 2)))


def test_solve_via_greens_checks_grids():
    kernel = greens_kernel(SPECS[0])
    with pytest.raises(GridMismatch):
        solve_via_greens(kernel, GridFunction(Grid(0.5, 1, 4), np.ones(4)))
    with pytest.raises(GridMismatch):
        solve_via_greens(kernel, GridFunction(Grid(0.0, 1, 2), np.ones(2)))


def test_kernel_table_is_read_only():
    kernel = greens_kernel(SPECS[0])
    with pytest.raises(ValueError):
        kernel.table[0, 0] = 1.0


def test_csv_export_matches_table():
    spec = BvpSpec(nu=2.5, b=4, k=2, j_orders=(0,))
    kernel = greens_kernel(spec)
    rows = list(csv.reader(io.StringIO(kernel_to_csv(kernel))))
    assert rows[0] == ["t\\s", "1", "2", "3", "4"]
    assert [int(r[0]) for r in rows[1:]] == list(range(-2, 5))
    values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    assert np.array_equal(values, kernel.table)


def test_json_export_round_trips_doubles():
    kernel = greens_kernel(SPECS[2])
    doc = json.loads(kernel_to_json(kernel))
    assert doc == json.loads(json.dumps(kernel_to_dict(kernel)))
    assert np.array_equal(np.array(doc["table"]), kernel.table)
    assert doc["spec"]["k"] == 2
