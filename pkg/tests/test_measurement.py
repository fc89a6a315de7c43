import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracinv.forward import ForwardProblem, PolynomialNonlinearity, solve_linear, solve_semilinear
from fracinv.grid import build_grid, field_from_function
from fracinv.measurement import (
    ACTIVE,
    PASSIVE,
    MeasurementSet,
    add_noise,
    measure,
    smooth_bump,
    synthesize_exterior_family,
    take_cauchy_pair,
)
from fracinv.operator import assemble_operator


def _const(g, c):
    return field_from_function(g, lambda x: c + 0 * x, g.interior)


def test_zero_pair(op):
    p = take_cauchy_pair(op, op.grid.zeros())
    assert not p.dirichlet.any() and not p.neumann.any()


def test_passive_pair(op):
    u0 = solve_linear(op, None, _const(op.grid, -0.02)).u
    p = take_cauchy_pair(op, u0)
    assert p.tag == PASSIVE
    assert np.all(p.dirichlet == 0)
    assert np.max(np.abs(p.neumann)) > 1e-6
    # the operator is repulsive off omega: exterior action of a negative bump is positive
    assert np.all(p.neumann > 0)


def test_pair_sizes(op):
    g = op.grid
    f = smooth_bump(g) * 0.05
    p = take_cauchy_pair(op, solve_linear(op, None, None, f).u, f)
    assert p.tag == ACTIVE
    assert p.dirichlet.size == g.window1.count and p.neumann.size == g.window2.count


def test_bump_properties(grid):
    b = smooth_bump(grid)
    assert b.values.max() == 1.0
    assert np.all(b.values >= 0)
    assert np.all(b.values[~grid.window1.mask] == 0)
    assert np.all(b.values[grid.window1.mask] > 0)


def test_family_formula(grid):
    g = smooth_bump(grid)
    fam = synthesize_exterior_family(grid, 3, 0.06)
    assert np.all(fam[0].values == 0)
    assert np.allclose(fam[1].values, 0.03 * g.values, rtol=1e-15, atol=0)
    assert np.allclose(fam[2].values, 0.06 * g.values, rtol=1e-15, atol=0)
    assert fam.separation == pytest.approx(0.03)


def test_family_single(grid):
    fam = synthesize_exterior_family(grid, 1, 0.06)
    assert len(fam) == 1 and not fam[0].values.any()


def test_family_validation(grid):
    with pytest.raises(ValueError):
        synthesize_exterior_family(grid, 0, 0.06)
    with pytest.raises(ValueError):
        synthesize_exterior_family(grid, 3, 0.0)
    with pytest.raises(ValueError):
        synthesize_exterior_family(grid, 3, 0.06, bump=-smooth_bump(grid))


def test_family_negative_sign(grid):
    fam = synthesize_exterior_family(grid, 2, 0.05, sign=-1)
    assert np.all(fam[1].values <= 0) and fam[1].values.min() == pytest.approx(-0.05)


@pytest.fixture(scope="module")
def mset(op):
    g = op.grid
    fam = synthesize_exterior_family(g, 3, 0.06)
    a = PolynomialNonlinearity((_const(g, 0.2), _const(g, 0.5)))
    sols = [solve_semilinear(ForwardProblem(op, a, _const(g, -0.01), f)).u for f in fam]
    return measure(op, sols, list(fam), fam.separation)


def test_noise_zero_identity(mset):
    m = add_noise(mset, 0.0)
    for p, q in zip(m, mset):
        assert np.array_equal(p.neumann, q.neumann)


def test_noise_reproducible(mset):
    a = add_noise(mset, 1e-3, seed=7)
    b = add_noise(mset, 1e-3, seed=7)
    c = add_noise(mset, 1e-3, seed=8)
    for p, q, r, o in zip(a, b, c, mset):
        assert np.array_equal(p.neumann, q.neumann)
        assert not np.array_equal(p.neumann, r.neumann)
        assert np.array_equal(p.dirichlet, o.dirichlet)
        assert np.max(np.abs(p.neumann - o.neumann)) <= 1e-3 * np.max(np.abs(o.neumann))
    assert a.noise_level == 1e-3


def test_noise_rejects_negative(mset):
    with pytest.raises(ValueError):
        add_noise(mset, -1.0)


def test_json_round_trip(mset, op):
    text = mset.to_json()
    back = MeasurementSet.from_json(op.grid, text)
    assert len(back) == 3
    for p, q in zip(back, mset):
        assert np.array_equal(p.neumann, q.neumann) and np.array_equal(p.dirichlet, q.dirichlet)
        assert p.input_id == q.input_id
    assert back.to_json() == text


def test_json_rejects_other_grid(mset):
    with pytest.raises(ValueError):
        MeasurementSet.from_json(build_grid(2.0, 201), mset.to_json())


def test_passive_zero_source_zero_nonlinearity(op):
    u = solve_semilinear(ForwardProblem(op, PolynomialNonlinearity.zero(op.grid, 2))).u
    p = take_cauchy_pair(op, u)
    assert not p.neumann.any()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_discriminability(seed):
    g = build_grid(2.0, 201)
    A = assemble_operator(g, 0.5)
    rng = np.random.default_rng(seed)
    c = rng.uniform(-0.8, 0.8)
    bump = field_from_function(g, lambda x: 1e-2 * np.exp(-20 * (x - c) ** 2), g.interior)
    a2 = _const(g, 0.5)
    f = smooth_bump(g) * rng.uniform(0.02, 0.09)
    F = _const(g, rng.uniform(-0.05, 0.05))
    u = solve_semilinear(ForwardProblem(A, PolynomialNonlinearity.quadratic(a2), F, f)).u
    v = solve_semilinear(ForwardProblem(A, PolynomialNonlinearity.quadratic(a2 + bump), F, f)).u
    d = take_cauchy_pair(A, u, f).neumann - take_cauchy_pair(A, v, f).neumann
    assert np.max(np.abs(d)) > 1e-12
