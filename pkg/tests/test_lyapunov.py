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

from src.calculus.operators import caputo_operator
from src.core.errors import InadmissibleSpec, InconsistentSpec, SamplingBudgetExhausted, SingularSystem
from src.core.grid import Order
from src.lyapunov.bounds import (
    Side,
    bound_violations,
    constant_A,
    greens_integral,
    greens_integral_brute,
    greens_integral_table,
    integral_bound,
    max_of_max_violations,
    monomial_property_violations,
)
from src.lyapunov.inequality import (
    REPORT_CSV_HEADER,
    BoundaryPattern,
    ThresholdVariant,
    all_placements,
    back_substitute_left_values,
    boundary_rows,
    check_nontrivial,
    lyapunov_report,
    lyapunov_threshold,
    planting_space,
    q_integral,
    report_to_json,
    reports_to_csv,
    solve_forced_bvp,
    synth_critical_instance,
    uniqueness_sufficient,
    vanishing_forces_trivial,
    weighted_system,
)
from src.solvers.ivp import weighted_residual


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


# --- constant A and kernel integrals ---

def test_constant_A_examples():
    assert constant_A(1.5, 0, 4) == pytest.approx(6.5625)
    assert constant_A(2.0, 0, 3) == pytest.approx(7.5)


def test_integral_bound_by_j():
    assert integral_bound(1.5, 0, 0, 4) == pytest.approx(6.5625)
    assert integral_bound(1.5, 1, 0, 4) == pytest.approx(15.0)


@pytest.mark.parametrize("gamma", [0.9, 2.5])
def test_gamma_out_of_range(gamma):
    with pytest.raises(InadmissibleSpec):
        constant_A(gamma, 0, 4)


@pytest.mark.parametrize("gamma", [1.1, 1.5, 1.9, 2.0])
@pytest.mark.parametrize("j", [0, 1])
def test_integrals_bounded_and_match_brute_force(gamma, j):
    for length in range(1, 11):
        assert bound_violations(gamma, j, 0.0, float(length)) == []
        assert max_of_max_violations(gamma, j, 0.0, float(length)) == []
        for side in Side:
            table = greens_integral_table(gamma, j, 0.0, float(length), side)
            brute = greens_integral_brute(gamma, j, 0.0, float(length), side)
            np.testing.assert_allclose(table, brute, rtol=1e-10, atol=1e-10)


def test_pointwise_integral_matches_table():
    table = greens_integral_table(1.5, 0, 0.0, 6.0, Side.RIGHT)
    for t in range(-1, 7):
        for s in range(1, 7):
            assert greens_integral(1.5, 0, 0.0, 6.0, t, s, Side.RIGHT) == pytest.approx(table[t + 1, s - 1], abs=1e-12)


def test_left_integral_is_zero_at_start():
    table = greens_integral_table(1.7, 1, 0.0, 5.0, Side.LEFT)
    assert np.all(table[0] == 0.0)


def test_monomial_properties_hold():
    alphas = [-0.9, -0.5, -0.2, 0.0, 0.3, 0.5, 1.0, 1.5, 2.0, 3.7]
    assert monomial_property_violations(alphas, 10) == []


def test_monomial_properties_reject_alpha_at_minus_one():
    with pytest.raises(InadmissibleSpec):
        monomial_property_violations([-1.0], 5)


# --- thresholds and patterns ---

def test_threshold_examples():
    order = Order(2.5)
    assert lyapunov_threshold(order, 0, 4, ThresholdVariant.CONJUGATE_A) == pytest.approx(16 / 525)
    assert lyapunov_threshold(order, 0, 4, ThresholdVariant.FOCAL_H2) == pytest.approx(1 / 75)


def test_threshold_needs_order_above_two():
    with pytest.raises(InadmissibleSpec):
        lyapunov_threshold(Order(1.8), 0, 4, ThresholdVariant.FOCAL_H2)


def test_patterns():
    patterns = all_placements(5, 2)
    assert len(patterns) == 8
    assert patterns[0].label == "r2:LLL"
    assert patterns[0].variant is ThresholdVariant.CONJUGATE_A
    assert BoundaryPattern(r=1).variant is ThresholdVariant.FOCAL_H2
    with pytest.raises(InconsistentSpec):
        BoundaryPattern(r=2, placements=("left",)).check(4)
    with pytest.raises(ValidationError):
        BoundaryPattern(r=3)


def test_weighted_system_is_square():
    order = Order(3.4)
    m = weighted_system(order, 0, 6, np.zeros(6), all_placements(4, 1)[2])
    assert m.shape == (10, 10)


def test_q_integral_shape_checked():
    assert q_integral([1.0, -2.0, 0.5], 3) == pytest.approx(3.5)
    with pytest.raises(InconsistentSpec):
        q_integral([1.0, 2.0], 3)


# --- instance synthesis and soundness ---

@pytest.mark.parametrize("nu", [2.3, 2.5, 3.0, 3.6, 4.8])
@pytest.mark.parametrize("r", [1, 2])
def test_planted_instances_never_refute(nu, r, rng):
    order = Order(nu)
    for pattern in all_placements(order.n_ceil, r):
        length = int(rng.integers(order.n_ceil - 1, 10))
        q, x = synth_critical_instance(order, 0.0, float(length), pattern, seed=int(rng.integers(1 << 31)))
        assert np.max(np.abs(weighted_residual(order, x, q.values, np.zeros(length)))) < 1e-10
        report = lyapunov_report(order, 0.0, float(length), q, pattern)
        assert report.nontrivial_exists
        assert report.inequality_holds
        assert not report.refuted
        assert report.ratio >= 1.0 - 1e-9


def test_synthesis_is_seeded():
    order, pattern = Order(2.5), BoundaryPattern(r=2, placements=("right",))
    q1, _ = synth_critical_instance(order, 0.0, 5.0, pattern, seed=9)
    q2, _ = synth_critical_instance(order, 0.0, 5.0, pattern, seed=9)
    assert np.array_equal(q1.values, q2.values)


def test_planting_space_marks_forced_zeros():
    # r = 2, c_0 = b: nabla x(b) = 0 and x(b) = 0 force x(b-1) = 0
    _, forced = planting_space(Order(2.5), 5, BoundaryPattern(r=2, placements=("right",)))
    assert forced.tolist() == [False, False, False, False, True]
    # r = 1, c_0 = c_1 = b: x(b) = nabla x(b) = 0 force x(b-1) = 0
    _, forced = planting_space(Order(3.6), 6, BoundaryPattern(r=1, placements=("right", "right")))
    assert forced[-1]
    _, forced = planting_space(Order(3.6), 6, BoundaryPattern(r=1, placements=("left", "left")))
    assert not forced.any()


@pytest.mark.parametrize("nu, r, placements", [
    (2.5, 2, ("right",)),
    (2.3, 2, ("right",)),
    (3.6, 1, ("right", "right")),
    (4.8, 1, ("right", "right", "right")),
    (4.8, 2, ("left", "right", "right")),
])
def test_forced_zero_patterns_still_plant(nu, r, placements):
    order, pattern = Order(nu), BoundaryPattern(r=r, placements=placements)
    length = 7
    q, x = synth_critical_instance(order, 0.0, float(length), pattern, seed=5)
    _, forced = planting_space(order, length, pattern)
    shifted = x.values_on(0, length - 1)
    assert np.all(shifted[forced] == 0.0)
    assert np.all(np.abs(shifted[~forced]) >= 0.05)
    assert np.max(np.abs(weighted_residual(order, x, q.values, np.zeros(length)))) < 1e-10
    assert np.max(np.abs(boundary_rows(order, length, pattern) @ x.values)) < 1e-10
    report = lyapunov_report(order, 0.0, float(length), q, pattern)
    assert report.nontrivial_exists
    assert not report.refuted


def test_synthesis_budget(monkeypatch):
    from src.core.config import get_settings

    monkeypatch.setattr(get_settings(), "sampler_min_abs", 10.0)
    monkeypatch.setattr(get_settings(), "sampler_budget", 5)
    with pytest.raises(SamplingBudgetExhausted):
        synth_critical_instance(Order(2.5), 0.0, 4.0, BoundaryPattern(r=2, placements=("left",)), seed=1)


def test_report_short_chain_flag():
    order = Order(2.5)
    report = lyapunov_report(order, 0, 4, np.full(4, 0.001), BoundaryPattern(r=2, placements=("left",)))
    assert report.short_chain
    assert report.threshold == pytest.approx(16 / 525)
    assert report.A_value == pytest.approx(6.5625)
    assert not report.nontrivial_exists
    assert not report.refuted


# --- uniqueness and the forced problem ---

def test_below_threshold_is_unique_and_solvable(rng):
    order = Order(3.3)
    pattern = BoundaryPattern(r=1, placements=("left", "right"))
    threshold = lyapunov_threshold(order, 0, 7, ThresholdVariant.FOCAL_H2)
    q = rng.uniform(-1, 1, size=7)
    q *= 0.5 * threshold / np.sum(np.abs(q))
    assert uniqueness_sufficient(order, 0, 7, q, 1)
    assert not check_nontrivial(order, 0, 7, q, pattern)
    f = rng.uniform(-1, 1, size=7)
    x = solve_forced_bvp(order, 0, 7, q, f, pattern, 0.3, -0.2, [1.0, 0.5])
    rhs = np.concatenate([f, [0.3, -0.2, 1.0, 0.5]])
    assert np.max(np.abs(weighted_system(order, 0, 7, q, pattern) @ x.values - rhs)) < 1e-9


@pytest.mark.parametrize("r", [0, 3])
def test_uniqueness_needs_r_one_or_two(r):
    with pytest.raises(InadmissibleSpec):
        uniqueness_sufficient(Order(2.5), 0, 4, np.zeros(4), r)


def test_threshold_itself_is_not_sufficient():
    order = Order(2.5)
    threshold = lyapunov_threshold(order, 0, 4, ThresholdVariant.CONJUGATE_A)
    q = np.array([threshold, 0.0, 0.0, 0.0])
    assert not uniqueness_sufficient(order, 0, 4, q, 2)


def test_forced_problem_singular_for_planted_potential():
    order, pattern = Order(2.8), BoundaryPattern(r=2, placements=("left",))
    q, _ = synth_critical_instance(order, 0.0, 5.0, pattern, seed=3)
    with pytest.raises(SingularSystem):
        solve_forced_bvp(order, 0.0, 5.0, q, np.zeros(5), pattern)


def test_forced_problem_checks_inner_values():
    with pytest.raises(InconsistentSpec):
        solve_forced_bvp(Order(3.5), 0, 5, np.zeros(5), np.zeros(5), BoundaryPattern(r=1, placements=("left", "left")),
                         inner_values=[1.0])


def test_vanishing_forces_trivial_needs_enough_points(rng):
    for nu in (1.5, 2.5, 3.2, 4.0):
        n = Order(nu).n_ceil
        q = rng.uniform(-1, 1, size=n + 3)
        assert vanishing_forces_trivial(Order(nu), 0, n + 3, q)
        assert vanishing_forces_trivial(Order(nu), 0, n, q[:n])
        # one point short: x(b) alone can be nonzero
        assert not vanishing_forces_trivial(Order(nu), 0, n - 1, q[:n - 1])


def test_back_substitution_recovers_left_values(rng):
    for nu in (1.5, 2.5, 3.2, 4.7):
        order = Order(nu)
        n = order.n_ceil
        left = rng.uniform(-1, 1, size=n - 1)
        x = np.concatenate([left, np.zeros(n)])
        values = caputo_operator(order, n - 1) @ x
        np.testing.assert_allclose(back_substitute_left_values(order, values), left, rtol=1e-9, atol=1e-12)
        assert np.all(back_substitute_left_values(order, np.zeros(n - 1)) == 0.0)


# --- export ---

def test_report_exports():
    order, pattern = Order(2.5), BoundaryPattern(r=2, placements=("left",))
    report = lyapunov_report(order, 0, 4, [0.01, 0.0, 0.0, 0.0], pattern)
    doc = json.loads(report_to_json(report))
    assert doc["threshold_kind"] == "conjugate_A"
    assert doc["pattern"]["placements"] == ["left"]
    rows = list(csv.reader(io.StringIO(reports_to_csv([report, report]))))
    assert rows[0] == REPORT_CSV_HEADER
    assert len(rows) == 3
    assert rows[1][4] == "r2:L"
    assert float(rows[1][6]) == report.threshold
