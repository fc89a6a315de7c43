"""Pure-numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` one for one and are used whenever the compiled
extension is unavailable (or ``FRACINV_PURE=1`` is set).
"""
import numpy as np


def _second_difference_power(k, p):
    # (k+1)^p - 2 k^p + (k-1)^p = 2 k^p [expm1(m) cosh(d) + 2 sinh(d/2)^2]
    # with m = p/2 log(1 - 1/k^2), d = p atanh(1/k); no O(k) cancellation
    inv = 1.0 / k
    m = 0.5 * p * np.log1p(-inv * inv)
    d = p * np.arctanh(inv)
    return 2.0 * k**p * (np.expm1(m) * np.cosh(d) + 2.0 * np.sinh(0.5 * d) ** 2)


def lag_weights(n, s):
    """Scaled interaction weights for lags 0..n-1 (lag 0 is zero).

    Entry k is the integral of the unit hat centred at lag k against
    t^(-1-2s) over t >= 1, in units where h = 1.
    """
    out = np.zeros(n)
    if n < 2:
        return out
    if s == 0.5:
        out[1] = -np.log(2.0) + 1.0
        if n > 2:
            k = np.arange(2, n, dtype=float)
            # -log(k+1) + 2 log k - log(k-1)
            out[2:] = -np.log1p(-1.0 / (k * k))
        return out
    p = 1.0 - 2.0 * s
    scale = 1.0 / (2.0 * s * (2.0 * s - 1.0))
    # half hat on [1, 2]: G(2) - G(1) - G'(1)
    out[1] = scale * (2.0**p - 1.0) + 1.0 / (2.0 * s)
    if n > 2:
        k = np.arange(2, n, dtype=float)
        out[2:] = scale * _second_difference_power(k, p)
    return out


def toeplitz_matvec(col, u):
    """Symmetric Toeplitz product y = T u with T[i, j] = col[|i - j|]."""
    m = u.shape[0]
    y = np.empty(m)
    for i in range(m):
        # fixed summation order: j ascending
        y[i] = np.dot(col[np.abs(np.arange(m) - i)], u)
    return y


def toeplitz_dense(col):
    m = col.shape[0]
    idx = np.abs(np.subtract.outer(np.arange(m), np.arange(m)))
    return col[idx]


def solve_small_batched(mats, rhs):
    """Solve a stack of small systems by Gaussian elimination.

    Partial pivoting picks the largest modulus in the column; ties go to the
    smallest row index. Returns (solutions, |det|). Singular systems yield
    non-finite solutions and zero determinant.
    """
    a = np.array(mats, dtype=float, copy=True)
    b = np.array(rhs, dtype=float, copy=True)
    p, n, _ = a.shape
    det = np.ones(p)
    rows = np.arange(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        for col in range(n):
            piv = col + np.argmax(np.abs(a[:, col:, col]), axis=1)
            swap = piv != col
            if np.any(swap):
                r = rows[swap]
                tmp = a[r, col, :].copy()
                a[r, col, :] = a[r, piv[swap], :]
                a[r, piv[swap], :] = tmp
                tb = b[r, col].copy()
                b[r, col] = b[r, piv[swap]]
                b[r, piv[swap]] = tb
            pivot = a[:, col, col]
            det *= np.abs(pivot)
            for row in range(col + 1, n):
                f = a[:, row, col] / pivot
                a[:, row, col:] -= f[:, None] * a[:, col, col:]
                b[:, row] -= f * b[:, col]
        x = np.empty((p, n))
        for row in range(n - 1, -1, -1):
            acc = b[:, row].copy()
            for j in range(row + 1, n):
                acc -= a[:, row, j] * x[:, j]
            x[:, row] = acc / a[:, row, row]
    return x, det


def vandermonde_products(values):
    """Row-wise prod_{l<m} (v[m] - v[l]) for a (P, n) array."""
    v = np.asarray(values, dtype=float)
    out = np.ones(v.shape[0])
    n = v.shape[1]
    for m in range(n):
        for l in range(m):
            out *= v[:, m] - v[:, l]
    return out
