import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracinv.grid import (
    EXTERIOR_OTHER,
    EXTERIOR_W1,
    EXTERIOR_W2,
    INTERIOR,
    TAGS,
    GridError,
    ScalarField,
    build_grid,
    field_from_function,
    field_norms,
    grid_from_config,
    read_field_csv,
    write_columns_csv,
)


def test_default_grid(grid):
    assert grid.h == pytest.approx(0.01, rel=1e-14)
    assert grid.interior.count == 199
    assert grid.x[0] == -2.0 and grid.x[-1] == 2.0
    assert np.all(np.diff(grid.x) > 0)


def test_w1_overlapping_omega_rejected():
    with pytest.raises(GridError, match="(?i)w1"):
        build_grid(2.0, 401, (-1, 1), (0.5, 1.5), (-1.6, -1.2))


def test_coarsest_grid_is_underresolved():
    # h = 0.5 leaves one node strictly inside each window, fewer than required
    with pytest.raises(GridError, match="nodes"):
        build_grid(2.0, 9)


def test_node_count_validation():
    with pytest.raises(GridError):
        build_grid(2.0, 400)
    with pytest.raises(GridError):
        build_grid(2.0, 7)


@pytest.mark.parametrize("omega", [(-2.0, 1.0), (-1.0, 2.5)])
def test_omega_must_sit_inside(omega):
    with pytest.raises(GridError):
        build_grid(2.0, 401, omega)


def test_windows_disjoint_from_each_other():
    with pytest.raises(GridError):
        build_grid(2.0, 401, (-1, 1), (1.2, 1.6), (1.4, 1.8))


def test_tags_partition(grid):
    counts = sum(grid.mask(t).count for t in TAGS)
    assert counts == grid.node_count
    assert set(np.unique(grid.tags)) == {INTERIOR, EXTERIOR_W1, EXTERIOR_W2, EXTERIOR_OTHER}
    assert (grid.interior.count + grid.exterior.count) == grid.node_count


def test_membership_is_strict(grid):
    x = grid.x
    assert not grid.interior.mask[np.isclose(x, 1.0)].any()
    assert not grid.window1.mask[np.isclose(x, 1.2)].any()
    assert np.all(np.abs(x[grid.interior.mask]) < 1)


def test_grid_config_round_trip(grid):
    assert grid_from_config(grid.config()).same_as(grid)


def test_zero_sampler(grid):
    f = field_from_function(grid, lambda x: 0.0 * x, grid.interior)
    assert np.all(f.values == 0)


def test_getoor_profile_sampling(grid):
    f = field_from_function(grid, lambda x: np.sqrt(np.clip(1 - x**2, 0, None)), grid.interior)
    assert f.values[grid.x == 0.0][0] == 1.0
    assert np.all(f.values[np.abs(grid.x) >= 1] == 0)


def test_nan_sampler_names_node(grid):
    with pytest.raises(ValueError, match="node"):
        field_from_function(grid, lambda x: np.nan * x)


def test_pointwise_sampler(small_grid):
    import math

    f = field_from_function(small_grid, lambda x: math.cos(x), small_grid.interior)
    assert np.allclose(f.on(small_grid.interior), np.cos(small_grid.x[small_grid.interior.mask]))


def test_nonfinite_field_rejected(grid):
    v = np.zeros(grid.node_count)
    v[5] = np.inf
    with pytest.raises(ValueError):
        ScalarField(grid, v)


def test_field_is_readonly(grid):
    f = grid.zeros()
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_norms(grid):
    assert field_norms(grid.zeros(), grid.interior) == (0.0, 0.0)
    one = field_from_function(grid, lambda x: 1 + 0 * x, grid.interior)
    sup, l2 = field_norms(one, grid.interior)
    assert sup == 1.0
    assert l2 == pytest.approx(np.sqrt(grid.h * 199), rel=1e-14)
    ident = field_from_function(grid, lambda x: x, grid.interior)
    assert field_norms(ident, grid.interior)[0] == pytest.approx(0.99, rel=1e-12)


def test_empty_region_norm(grid):
    empty = ~grid.everywhere
    with pytest.raises(ValueError):
        field_norms(grid.zeros(), empty)


def test_fields_on_different_grids(grid, small_grid):
    with pytest.raises(ValueError):
        grid.zeros() + small_grid.zeros()


def test_csv_round_trip(tmp_path, grid):
    f = field_from_function(grid, lambda x: np.sin(3 * x) / 7, grid.interior)
    path = tmp_path / "f.csv"
    f.to_csv(path)
    g = read_field_csv(grid, path)
    assert np.array_equal(f.values, g.values)


def test_csv_digits(tmp_path):
    path = tmp_path / "c.csv"
    write_columns_csv(path, {"v": [1 / 3], "n": [2], "b": [True]})
    row = path.read_text().splitlines()[1].split(",")
    assert row[0] == format(1 / 3, ".17g")
    assert row[1:] == ["2", "1"]


@settings(max_examples=40, deadline=None)
@given(st.one_of(st.just(0.0), st.floats(1e-100, 1e3), st.floats(-1e3, -1e-100)), st.integers(0, 2**31 - 1))
def test_norm_homogeneity(c, seed):
    g = build_grid(2.0, 101)
    rng = np.random.default_rng(seed)
    f = ScalarField(g, rng.normal(size=g.node_count))
    for a, b in zip(field_norms(f * c, g.interior), field_norms(f, g.interior)):
        assert a == pytest.approx(abs(c) * b, rel=1e-12, abs=1e-300)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([INTERIOR, EXTERIOR_W1, EXTERIOR_W2, "exterior"]), st.integers(0, 1000))
def test_restriction_idempotent(region, k):
    g = build_grid(2.0, 101)
    mask = g.mask(region)
    f = field_from_function(g, lambda x: np.cos(x + k), mask)
    assert np.array_equal(f.restrict(mask).values, f.values)
    assert np.all(f.values[~mask.mask] == 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(25, 400).map(lambda n: 2 * n + 1), st.floats(1.5, 4.0))
def test_partition_property(m, L):
    g = build_grid(L, m, (-1, 1), (1.05, L - 0.1), (-L + 0.1, -1.05)) if m * 0.05 / L > 3 else None
    if g is None:
        return
    tags = [g.mask(t).mask for t in TAGS]
    assert np.array_equal(sum(t.astype(int) for t in tags), np.ones(m, dtype=int))
