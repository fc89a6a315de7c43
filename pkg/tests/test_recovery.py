import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracinv.forward import (
    ForwardProblem,
    PolynomialNonlinearity,
    second_linearization_residual,
    solve_first_linearization,
    solve_linear,
    solve_semilinear,
)
from fracinv.grid import ScalarField, build_grid, field_from_function
from fracinv.measurement import measure, synthesize_exterior_family
from fracinv.operator import assemble_operator
from fracinv.recovery import (
    RecoveryError,
    build_vandermonde_system,
    recover_linear_two,
    recover_polynomial,
    recover_quadratic_two,
    recover_source_passive,
    runge_approximate,
    second_order_difference,
    vandermonde_det,
    verify_second_order_identity,
)


def _f(g, fn):
    return field_from_function(g, fn, g.interior)


def _const(g, c):
    return _f(g, lambda x: c + 0 * x)


def _solutions(A, a, F, fam):
    return [solve_semilinear(ForwardProblem(A, a, F, f), polish=1).u for f in fam]


# --- passive source ---------------------------------------------------------


def test_passive_zero(op):
    assert not recover_source_passive(op, op.grid.zeros()).values.any()


def test_passive_round_trip_linear(op):
    g = op.grid
    F = _f(g, lambda x: 0.05 * np.cos(2 * x) - 0.01 * x)
    u0 = solve_linear(op, None, F).u
    rec = recover_source_passive(op, u0)
    assert np.max(np.abs(rec.values - F.values)) <= 1e-9


def test_passive_manufactured_quadratic(op):
    g = op.grid
    us = _f(g, lambda x: 0.05 * np.cos(np.pi * x / 2) ** 2)
    a = PolynomialNonlinearity.quadratic(_const(g, 1.0))
    F = op.matvec(us.values) + us.values**2
    rec = recover_source_passive(op, us, a)
    assert np.array_equal(rec.on(g.interior), F[g.interior.mask])


# --- linear, two measurements -----------------------------------------------


@pytest.fixture(scope="module")
def linear_data(op):
    g = op.grid
    a1 = _f(g, lambda x: 0.3 * (1 + x))
    F = _const(g, -0.02)
    fam = synthesize_exterior_family(g, 2, 0.05)
    u0, u = (solve_linear(op, a1, F, f).u for f in fam)
    return a1, F, u0, u, fam


def test_linear_two(op, linear_data):
    a1, F, u0, u, _ = linear_data
    rep = recover_linear_two(op, u, u0)
    errs = rep.compare([a1], F)
    assert errs["a1"] <= 1e-6 and errs["F"] <= 1e-6
    assert rep.masked_fraction <= 0.2


def test_linear_two_zero_potential(op):
    g = op.grid
    F = _const(g, -0.02)
    fam = synthesize_exterior_family(g, 2, 0.05)
    u0, u = (solve_linear(op, None, F, f).u for f in fam)
    rep = recover_linear_two(op, u, u0)
    assert np.max(np.abs(rep.coefficient(1)[rep.unmasked])) <= 1e-8


def test_linear_two_needs_distinct_inputs(op, linear_data):
    _, _, u0, _, _ = linear_data
    with pytest.raises(RecoveryError):
        recover_linear_two(op, u0, u0)


def test_linear_two_report_io(op, linear_data, tmp_path):
    a1, F, u0, u, _ = linear_data
    rep = recover_linear_two(op, u, u0)
    rep.compare([a1], F)
    rep.to_csv(tmp_path / "r.csv", [a1], F)
    header = (tmp_path / "r.csv").read_text().splitlines()[0].split(",")
    assert header == ["x", "a1", "F", "det", "cond", "masked", "err_a1", "err_F"]
    doc = json.loads(rep.to_json())
    assert set(doc) >= {"masked_fraction", "errors", "degree"}


# --- polynomial, N + 1 measurements -----------------------------------------


def _poly_truth(g, n):
    coeffs = [_const(g, 0.2), _f(g, lambda x: 0.5 * (1 - x**2))]
    if n >= 3:
        coeffs.append(_f(g, lambda x: 0.3 * np.cos(x)))
    return PolynomialNonlinearity(tuple(coeffs)), _const(g, -0.01)


@pytest.fixture(scope="module")
def n2_data(op):
    a, F = _poly_truth(op.grid, 2)
    fam = synthesize_exterior_family(op.grid, 3, 0.06)
    return a, F, _solutions(op, a, F, fam), fam


def test_polynomial_n2(op, n2_data):
    a, F, sols, _ = n2_data
    rep = recover_polynomial(op, sols, 2)
    errs = rep.compare(list(a.coefficients), F)
    assert max(errs.values()) <= 1e-6
    assert rep.masked_fraction < 0.2
    assert np.all(np.isfinite(rep.cond[rep.unmasked]))
    assert rep.consistency <= 1e-10


def test_polynomial_n3(op):
    a, F = _poly_truth(op.grid, 3)
    fam = synthesize_exterior_family(op.grid, 4, 0.09)
    rep = recover_polynomial(op, _solutions(op, a, F, fam), 3, mask_tol=1e-2)
    assert max(rep.compare(list(a.coefficients), F).values()) <= 1e-5


def test_polynomial_no_spurious_degree(op, n2_data):
    a, F, _, _ = n2_data
    g = op.grid
    a3 = PolynomialNonlinearity(a.coefficients + (g.zeros(),))
    fam = synthesize_exterior_family(g, 4, 0.09)
    rep = recover_polynomial(op, _solutions(op, a3, F, fam), 3, mask_tol=1e-2)
    assert np.max(np.abs(rep.coefficient(3)[rep.unmasked])) <= 1e-5


def test_degree_one_matches_linear_two(op, linear_data):
    _, _, u0, u, _ = linear_data
    lin = recover_linear_two(op, u, u0)
    poly = recover_polynomial(op, [u0, u], 1)
    both = lin.unmasked & poly.unmasked
    assert both.sum() > 0.8 * op.grid.interior.count
    scale = np.max(np.abs(lin.coefficient(1)[both]))
    assert np.max(np.abs(lin.coefficient(1)[both] - poly.coefficient(1)[both])) <= 1e-10 * max(scale, 1)
    assert np.max(np.abs(lin.source[both] - poly.source[both])) <= 1e-10


def test_polynomial_errors(op, n2_data):
    _, _, sols, _ = n2_data
    with pytest.raises(RecoveryError):
        recover_polynomial(op, sols[:2], 2)
    with pytest.raises(RecoveryError):
        recover_polynomial(op, [sols[0]] * 3, 2)


def test_noise_linear(op, n2_data):
    a, F, sols, _ = n2_data
    errs = [max(recover_polynomial(op, sols, 2, noise=lv, seed=3).compare(list(a.coefficients), F).values())
            for lv in (1e-6, 1e-4)]
    slope = np.log(errs[1] / errs[0]) / np.log(100)
    assert 1 / 3 <= slope <= 3


def test_round_trip_w2(op, n2_data):
    a, F, sols, fam = n2_data
    rep = recover_polynomial(op, sols, 2)
    a_rec, F_rec = rep.filled()
    data = measure(op, sols, list(fam))
    for f, pair in zip(fam, data):
        u = solve_semilinear(ForwardProblem(op, a_rec, F_rec, f), polish=1).u
        assert np.max(np.abs(op.matvec(u.values)[op.grid.window2.mask] - pair.neumann)) <= 1e-6


def test_system_determinant(op, n2_data):
    _, _, sols, _ = n2_data
    sys_ = build_vandermonde_system(op, sols, 2)
    direct = np.abs(np.linalg.det(sys_.reduced_matrices()))
    assert np.allclose(sys_.determinant(), direct, rtol=1e-8, atol=0)


@settings(max_examples=10, deadline=None)
@given(st.permutations([0, 1, 2]))
def test_order_invariance(perm):
    g = build_grid(2.0, 201)
    A = assemble_operator(g, 0.5)
    a, F = _poly_truth(g, 2)
    sols = _solutions(A, a, F, synthesize_exterior_family(g, 3, 0.06))
    ref = recover_polynomial(A, sols, 2)
    rep = recover_polynomial(A, [sols[k] for k in perm], 2)
    for c, d in zip(ref.coefficients + [ref.source], rep.coefficients + [rep.source]):
        assert np.array_equal(c, d, equal_nan=True)


# --- Vandermonde product ------------------------------------------------------


def test_vandermonde_examples():
    assert vandermonde_det([0, 1]) == (1.0, 1.0)
    p, d = vandermonde_det([0, 1, 2])
    assert p == 2.0 and d == pytest.approx(2.0, rel=1e-15)
    assert vandermonde_det([0, 1, 1]).product == 0.0


@settings(max_examples=250, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=5, unique=True).filter(
    lambda v: min(abs(a - b) for i, a in enumerate(v) for b in v[:i]) > 1e-3))
def test_vandermonde_identity(values):
    p, d = vandermonde_det(values)
    assert d == pytest.approx(p, rel=1e-10)


# --- quadratic, two measurements -------------------------------------------


def _quadratic_pair(A, a2, F=-0.02, amp=0.05):
    g = A.grid
    a = PolynomialNonlinearity.quadratic(a2)
    fam = synthesize_exterior_family(g, 2, amp, sign=-1)
    return _solutions(A, a, _const(g, F), fam)


def test_quadratic_two(op):
    g = op.grid
    a2 = _f(g, lambda x: 0.4 * np.clip(1 - x**2, 0, None))
    u0, u = _quadratic_pair(op, a2)
    rep = recover_quadratic_two(op, u, u0)
    errs = rep.compare([g.zeros(), a2], _const(g, -0.02))
    assert errs["a2"] <= 1e-5 and errs["F"] <= 1e-5
    assert np.min(rep.coefficient(2)[rep.unmasked]) >= -1e-8


def test_quadratic_zero_truth(op):
    u0, u = _quadratic_pair(op, op.grid.zeros())
    rep = recover_quadratic_two(op, u, u0)
    assert np.max(np.abs(rep.coefficient(2)[rep.unmasked])) <= 1e-8


def test_quadratic_rejects_positive_input(op):
    g = op.grid
    a = PolynomialNonlinearity.quadratic(_const(g, 0.4))
    fam = synthesize_exterior_family(g, 2, 0.05)
    u0, u = _solutions(op, a, _const(g, -0.02), fam)
    with pytest.raises(RecoveryError, match="nonpositive"):
        recover_quadratic_two(op, u, u0)


def test_quadratic_rejects_equal(op):
    u0, _ = _quadratic_pair(op, _const(op.grid, 0.4))
    with pytest.raises(RecoveryError):
        recover_quadratic_two(op, u0, u0)


# --- Runge approximation ----------------------------------------------------


def test_runge_in_range(op):
    g = op.grid
    f = np.zeros(g.node_count)
    w1 = g.window1.indices
    f[w1[:4]] = [0.3, -0.1, 0.7, 0.2]
    v = solve_linear(op, None, None, ScalarField(g, f)).u
    res = runge_approximate(op, None, ScalarField(g, v.values * g.interior.mask), 8)
    assert res.residual <= 1e-10


def test_runge_zero_target(op):
    res = runge_approximate(op, None, op.grid.zeros(), 4)
    assert res.residual == 0.0 and not res.coefficients.any()


@pytest.mark.parametrize("order", ["natural", "spread"])
def test_runge_monotone(op, order):
    one = _const(op.grid, 1.0)
    r = [runge_approximate(op, None, one, d, order).residual for d in (2, 4, 8, 16)]
    assert all(b <= a for a, b in zip(r, r[1:]))
    assert r[-1] <= 0.9 * r[0]


def test_runge_dof_bounds(op):
    with pytest.raises(ValueError):
        runge_approximate(op, None, op.grid.zeros(), 0)
    with pytest.raises(ValueError):
        runge_approximate(op, None, op.grid.zeros(), op.grid.window1.count + 1)


# --- second-order identity --------------------------------------------------


@pytest.fixture(scope="module")
def identity_setup(op):
    g = op.grid
    a = PolynomialNonlinearity((_const(g, 0.2), _f(g, lambda x: 0.5 * (1 - x**2))))
    bump = _f(g, lambda x: 0.5 * np.exp(-8 * x**2))
    b = PolynomialNonlinearity((a.coefficients[0], a.coefficients[1] + bump))
    from fracinv.measurement import smooth_bump

    v1 = solve_first_linearization(op, a, g.zeros(), smooth_bump(g))
    v2 = runge_approximate(op, a.coefficients[0], _const(g, 1.0), 16).approximant
    return a, b, bump, v1, v2


def test_identity_same(op, identity_setup):
    a, _, _, v1, v2 = identity_setup
    w = second_order_difference(op, a, a, op.grid.zeros(), v1)
    assert verify_second_order_identity(op, a, op.grid.zeros(), v1, v2, w) <= 1e-10


def test_identity_bump(op, identity_setup):
    a, b, bump, v1, v2 = identity_setup
    g = op.grid
    w = second_order_difference(op, a, b, g.zeros(), v1)
    val = verify_second_order_identity(op, a, g.zeros(), v1, v2, w)
    assert val > 1e-6
    i = g.interior.mask
    # (A + a1)(w_a - w_b) = (d2b - d2a) v1^2 = 2 bump v1^2
    expected = abs(g.h * np.sum(2 * bump.values[i] * v1.values[i] ** 2 * v2.values[i]))
    assert val == pytest.approx(expected, rel=1e-8)


def test_identity_zero_v1(op, identity_setup):
    a, _, _, _, v2 = identity_setup
    g = op.grid
    w = second_linearization_residual(op, a, g.zeros(), g.zeros())
    assert verify_second_order_identity(op, a, g.zeros(), g.zeros(), v2, w) == 0.0
