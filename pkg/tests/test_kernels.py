import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracinv import _kernels_py as py
from fracinv import kernels

try:
    from fracinv import _ckernels as cy
except ImportError:  # pragma: no cover
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def test_backend_selected():
    forced = os.environ.get("FRACINV_PURE", "") in ("1", "true", "yes")
    assert kernels.BACKEND == ("cython" if cy is not None and not forced else "python")


def test_pure_env_forces_fallback():
    env = dict(os.environ, FRACINV_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import fracinv.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_ext
@pytest.mark.parametrize("s", [0.1, 0.25, 0.5, 0.5 + 1e-9, 0.75, 0.95])
def test_lag_weights_parity(s):
    a, b = py.lag_weights(801, s), cy.lag_weights(801, s)
    assert a[0] == b[0] == 0.0
    assert np.allclose(a, b, rtol=1e-13, atol=0)


@pytest.mark.parametrize("s", [0.1, 0.5, 0.9])
def test_lag_weights_far_lags_exact(s):
    # second differences of k^(1-2s) at large k, where naive evaluation cancels
    import mpmath

    w = kernels.lag_weights(1001, s)
    with mpmath.workdps(40):
        S = mpmath.mpf(s)
        p = 1 - 2 * S
        for k in (500, 999, 1000):
            K = mpmath.mpf(k)
            if s == 0.5:
                ref = -mpmath.log(1 - 1 / K**2)
            else:
                ref = ((K + 1) ** p - 2 * K**p + (K - 1) ** p) / (2 * S * (2 * S - 1))
            assert w[k] == pytest.approx(float(ref), rel=1e-14)


def test_lag_weights_positive_decreasing():
    w = py.lag_weights(400, 0.5)
    assert np.all(w[1:] > 0)
    assert np.all(np.diff(w[2:]) < 0)


@needs_ext
@settings(max_examples=25, deadline=None)
@given(st.integers(2, 60), st.integers(0, 2**31 - 1))
def test_toeplitz_parity(n, seed):
    rng = np.random.default_rng(seed)
    col = rng.normal(size=n)
    u = rng.normal(size=n)
    dense = py.toeplitz_dense(col)
    assert np.array_equal(dense, cy.toeplitz_dense(col))
    assert np.array_equal(dense, dense.T)
    ref = dense @ u
    assert np.allclose(py.toeplitz_matvec(col, u), ref, atol=1e-12)
    assert np.allclose(cy.toeplitz_matvec(col, u), ref, atol=1e-12)


@needs_ext
@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5), st.integers(1, 40), st.integers(0, 2**31 - 1))
def test_batched_solve_parity(n, nodes, seed):
    rng = np.random.default_rng(seed)
    mats = rng.normal(size=(nodes, n, n)) + 3 * np.eye(n)
    rhs = rng.normal(size=(nodes, n))
    xp, dp = py.solve_small_batched(mats, rhs)
    xc, dc = cy.solve_small_batched(mats, rhs)
    ref = np.linalg.solve(mats, rhs[..., None])[..., 0]
    assert np.allclose(xp, ref, atol=1e-10) and np.allclose(xc, ref, atol=1e-10)
    assert np.allclose(dp, np.abs(np.linalg.det(mats)), rtol=1e-10)
    assert np.allclose(dc, dp, rtol=1e-13)


@pytest.mark.parametrize("mod", [py] + ([cy] if cy is not None else []), ids=lambda m: m.__name__)
def test_pivot_tie_break(mod):
    # equal pivot candidates: the smallest row index wins, no swap needed
    mats = np.array([[[1.0, 2.0], [-1.0, 3.0]]])
    rhs = np.array([[3.0, 2.0]])
    x, det = mod.solve_small_batched(mats, rhs)
    assert np.allclose(x[0], [1.0, 1.0])
    assert det[0] == pytest.approx(5.0)


@pytest.mark.parametrize("mod", [py] + ([cy] if cy is not None else []), ids=lambda m: m.__name__)
def test_singular_system_gives_zero_det(mod):
    mats = np.array([[[1.0, 2.0], [2.0, 4.0]]])
    x, det = mod.solve_small_batched(mats, np.array([[1.0, 1.0]]))
    assert det[0] == 0.0
    assert not np.all(np.isfinite(x[0]))


@needs_ext
def test_vandermonde_parity():
    rng = np.random.default_rng(0)
    v = rng.uniform(-1, 1, size=(50, 4))
    assert np.allclose(py.vandermonde_products(v), cy.vandermonde_products(v), rtol=1e-14)
    assert py.vandermonde_products(np.array([[0.0, 1.0, 2.0]]))[0] == 2.0
