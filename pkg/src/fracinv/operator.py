"""Discrete fractional Laplacian on the truncated lattice.

For a nodal field u vanishing outside [-L, L] the action at node x_i is

    c * [ singular window + regular band + far tail ]

* singular window |y - x_i| < h: the second difference
  (2u_i - u_{i+1} - u_{i-1}) h^(-2s) / (2 - 2s), i.e. the quadratic
  interpolant integrated against z^(-1-2s) on (0, h);
* regular band h <= |y - x_i|, |y| <= L: exact integration of the piecewise
  linear interpolant against the kernel (closed-form antiderivatives);
* far tail |y| > L, where u = 0: t_i u_i with
  t_i = c [(L - x_i)^(-2s) + (L + x_i)^(-2s)] / (2s).

The diagonal produced by the band and the tail adds up to a constant, so the
assembled matrix is a symmetric Toeplitz matrix with nonpositive
off-diagonal entries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from . import kernels
from .grid import Grid, GridError, ScalarField, write_columns_csv

MIN_INTERIOR_NODES = 5


@dataclass(frozen=True)
class FracConstant:
    s: float
    c: float


def frac_constant(s: float) -> FracConstant:
    """Normalising constant c_{1,s} = Gamma(1/2+s) 4^s / (|Gamma(-s)| sqrt(pi))."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"order s must lie in (0, 1), got {s}")
    c = gamma(0.5 + s) * 4.0**s / (abs(gamma(-s)) * math.sqrt(math.pi))
    return FracConstant(float(s), float(c))


@dataclass(frozen=True, eq=False)
class NonlocalStiffness:
    """Assembled discrete (-Delta)^s.

    ``lag_weights[k]`` (k >= 1) is the interaction weight w_ij >= 0 for
    |i - j| = k; ``tail`` is the far-field coefficient t_i and ``row_diag``
    the near-field plus band diagonal d_i, so that the matrix is
    diag(d + t) - W.
    """

    grid: Grid
    s: float
    c: float
    lag_weights: np.ndarray = field(repr=False)
    tail: np.ndarray = field(repr=False)
    row_diag: np.ndarray = field(repr=False)
    first_column: np.ndarray = field(repr=False)
    matrix: np.ndarray = field(repr=False)

    @property
    def interior_idx(self) -> np.ndarray:
        return self.grid.interior.indices

    @property
    def exterior_idx(self) -> np.ndarray:
        return self.grid.exterior.indices

    def interior_block(self) -> np.ndarray:
        i = self.interior_idx
        return self.matrix[np.ix_(i, i)]

    def coupling_block(self) -> np.ndarray:
        """Rows on the interior, columns on the exterior nodes."""
        return self.matrix[np.ix_(self.interior_idx, self.exterior_idx)]

    def matvec(self, values: np.ndarray, fast: bool = False) -> np.ndarray:
        """Raw action on a nodal vector; entries at x = +-L are zeroed."""
        values = np.asarray(values, dtype=float)
        if fast:
            y = kernels.toeplitz_matvec(self.first_column, np.ascontiguousarray(values))
        else:
            y = self.matrix @ values
        y[0] = 0.0
        y[-1] = 0.0
        return y

    def to_csv(self, weights_path, tail_path) -> None:
        """Export (lag, weight) and per-node (x, tail, row_diag) tables."""
        lags = np.arange(self.first_column.size)
        write_columns_csv(weights_path, {"lag": lags, "weight": self.first_column})
        write_columns_csv(tail_path, {"x": self.grid.x, "tail": self.tail, "row_diag": self.row_diag})


def tail_coefficients(grid: Grid, s: float, c: float) -> np.ndarray:
    x = grid.x
    L = grid.half_width
    t = np.full(x.size, np.inf)
    inner = np.abs(x) < L
    t[inner] = c * ((L - x[inner]) ** (-2 * s) + (L + x[inner]) ** (-2 * s)) / (2 * s)
    return t


def assemble_operator(grid: Grid, s: float) -> NonlocalStiffness:
    fc = frac_constant(s)
    if grid.interior.count < MIN_INTERIOR_NODES:
        raise GridError(
            f"only {grid.interior.count} interior nodes; the singular window covers omega"
        )
    M, h, L, c = grid.node_count, grid.h, grid.half_width, fc.c
    scale = c * h ** (-2 * s)
    omega = kernels.lag_weights(M, s)
    weights = scale * omega
    near = 1.0 / (2.0 - 2.0 * s)

    col = -weights.copy()
    col[1] -= scale * near
    # band u_i-part + tail = c h^{-2s} / s for every node
    col[0] = scale * (1.0 / s + 2.0 * near)

    tail = tail_coefficients(grid, s, c)
    row_diag = np.full(M, np.nan)
    inner = np.abs(grid.x) < L
    row_diag[inner] = col[0] - tail[inner]

    col.setflags(write=False)
    weights.setflags(write=False)
    mat = kernels.toeplitz_dense(np.ascontiguousarray(col))
    mat.setflags(write=False)
    return NonlocalStiffness(grid, float(s), c, weights, tail, row_diag, col, mat)


def apply_operator(A: NonlocalStiffness, u: ScalarField, fast: bool = False) -> ScalarField:
    """Discrete (-Delta)^s u at every node with |x_i| < L (zero at x = +-L)."""
    if not A.grid.same_as(u.grid):
        raise ValueError("operator and field live on different grids")
    if u.values[0] != 0.0 or u.values[-1] != 0.0:
        raise ValueError("fields must vanish at the truncation boundary x = +-L")
    return ScalarField(u.grid, A.matvec(u.values, fast=fast))


def getoor_constant(s: float) -> float:
    """(-Delta)^s (1 - x^2)_+^s on (-1, 1) in one dimension."""
    return float(2 ** (2 * s) * gamma(1 + s) * gamma(0.5 + s) / gamma(0.5))


def getoor_profile(s: float, radius: float = 1.0):
    """(radius^2 - x^2)_+^s, whose fractional Laplacian is constant inside."""

    def profile(x):
        return np.clip(radius**2 - np.asarray(x, dtype=float) ** 2, 0.0, None) ** s

    return profile
