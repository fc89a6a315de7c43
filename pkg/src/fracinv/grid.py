"""Truncated 1-D lattice, region masks and nodal scalar fields."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

INTERIOR = "interior"
EXTERIOR_W1 = "exterior_W1"
EXTERIOR_W2 = "exterior_W2"
EXTERIOR_OTHER = "exterior_other"
TAGS = (INTERIOR, EXTERIOR_W1, EXTERIOR_W2, EXTERIOR_OTHER)

MIN_REGION_NODES = 3


class GridError(ValueError):
    pass


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform lattice x_i = -L + i h on [-L, L] with tagged regions.

    ``omega`` is the interior domain, ``w1`` the window carrying the
    exterior input and ``w2`` the observation window. A node belongs to a
    region when it lies strictly inside the region's open interval.
    """

    half_width: float
    node_count: int
    omega: tuple[float, float]
    w1: tuple[float, float]
    w2: tuple[float, float]
    x: np.ndarray = field(repr=False)
    tags: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.node_count - 1)

    def mask(self, name: str) -> "RegionMask":
        if name == "exterior":
            return RegionMask(self, self.tags != INTERIOR, "exterior")
        tag = {"omega": INTERIOR, "w1": EXTERIOR_W1, "w2": EXTERIOR_W2}.get(name, name)
        if tag not in TAGS:
            raise GridError(f"unknown region {name!r}")
        return RegionMask(self, self.tags == tag, name)

    @property
    def interior(self) -> "RegionMask":
        return self.mask("omega")

    @property
    def exterior(self) -> "RegionMask":
        return self.mask("exterior")

    @property
    def window1(self) -> "RegionMask":
        return self.mask("w1")

    @property
    def window2(self) -> "RegionMask":
        return self.mask("w2")

    @property
    def everywhere(self) -> "RegionMask":
        return RegionMask(self, np.ones(self.node_count, dtype=bool), "all")

    def same_as(self, other: "Grid") -> bool:
        return self is other or self.config() == other.config()

    def config(self) -> dict:
        """Flat key-value description of the grid."""
        return {
            "L": self.half_width,
            "M": self.node_count,
            "omega": list(self.omega),
            "w1": list(self.w1),
            "w2": list(self.w2),
        }

    def zeros(self) -> "ScalarField":
        return ScalarField(self, np.zeros(self.node_count))


@dataclass(frozen=True, eq=False)
class RegionMask:
    grid: Grid
    mask: np.ndarray
    name: str = ""

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def __invert__(self) -> "RegionMask":
        return RegionMask(self.grid, ~self.mask, f"~{self.name}")


def _check_interval(name, iv):
    lo, hi = float(iv[0]), float(iv[1])
    if not lo < hi:
        raise GridError(f"{name} must satisfy lo < hi, got {iv}")
    return lo, hi


def _closures_disjoint(a, b):
    return a[1] < b[0] or b[1] < a[0]


def build_grid(
    L: float = 2.0,
    M: int = 401,
    omega=(-1.0, 1.0),
    w1=(1.2, 1.6),
    w2=(-1.6, -1.2),
) -> Grid:
    """Build the tagged lattice.

    Raises GridError on an even or too small node count, overlapping or
    touching regions, regions leaving [-L, L], and regions with fewer than
    three nodes.
    """
    L = float(L)
    if L <= 0:
        raise GridError("half width L must be positive")
    if int(M) != M or M < 9 or M % 2 == 0:
        raise GridError(f"node count M must be an odd integer >= 9, got {M}")
    M = int(M)
    omega = _check_interval("omega", omega)
    w1 = _check_interval("w1", w1)
    w2 = _check_interval("w2", w2)
    if not (-L < omega[0] and omega[1] < L):
        raise GridError("omega must lie strictly inside (-L, L)")
    for name, w in (("w1", w1), ("w2", w2)):
        if w[0] < -L or w[1] > L:
            raise GridError(f"{name} must lie inside (-L, L)")
        if not _closures_disjoint(omega, w):
            raise GridError(f"{name} overlaps omega (closures must be disjoint)")
    if not _closures_disjoint(w1, w2):
        raise GridError("w1 and w2 overlap")

    # symmetric about 0 with x_0 = -L, x_{M-1} = L exactly
    half = (M - 1) // 2
    x = L * (np.arange(M) - half) / half
    # a node within roundoff of an endpoint counts as on it
    snap = 1e-9 * (2.0 * L / (M - 1))
    tags = np.full(M, EXTERIOR_OTHER, dtype=object)
    for tag, (lo, hi) in ((INTERIOR, omega), (EXTERIOR_W1, w1), (EXTERIOR_W2, w2)):
        inside = (x > lo + snap) & (x < hi - snap)
        if inside.sum() < MIN_REGION_NODES:
            raise GridError(
                f"region {tag} has {int(inside.sum())} nodes (< {MIN_REGION_NODES}); refine the grid"
            )
        tags[inside] = tag
    return Grid(L, M, omega, w1, w2, _readonly(x), tags)


def grid_from_config(cfg: dict) -> Grid:
    return build_grid(cfg.get("L", 2.0), cfg.get("M", 401), cfg.get("omega", (-1.0, 1.0)),
                      cfg.get("w1", (1.2, 1.6)), cfg.get("w2", (-1.6, -1.2)))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal values of a function on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = _readonly(self.values)
        if v.shape != (self.grid.node_count,):
            raise ValueError(f"expected {self.grid.node_count} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise ValueError(f"non-finite value at node {bad} (x={self.grid.x[bad]:.6g})")
        object.__setattr__(self, "values", v)

    def _coerce(self, other):
        if isinstance(other, ScalarField):
            if not self.grid.same_as(other.grid):
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def restrict(self, region: RegionMask) -> "ScalarField":
        """Copy of the field with values outside ``region`` set to zero."""
        return ScalarField(self.grid, np.where(region.mask, self.values, 0.0))

    def on(self, region: RegionMask) -> np.ndarray:
        return self.values[region.mask]

    def to_csv(self, path) -> None:
        write_columns_csv(path, {"x": self.grid.x, "value": self.values})


def field_from_function(grid: Grid, sampler: Callable, region: RegionMask | None = None) -> ScalarField:
    """Sample ``sampler`` on the nodes of ``region``; zero elsewhere."""
    region = grid.everywhere if region is None else region
    xs = grid.x[region.mask]
    try:
        vals = np.asarray(sampler(xs), dtype=float)
        if vals.shape != xs.shape:
            vals = np.broadcast_to(vals, xs.shape).astype(float)
    except (TypeError, ValueError):
        vals = np.array([float(sampler(float(t))) for t in xs])
    bad = ~np.isfinite(vals)
    if bad.any():
        k = int(region.indices[np.flatnonzero(bad)[0]])
        raise ValueError(f"sampler returned a non-finite value at node {k} (x={grid.x[k]:.6g})")
    out = np.zeros(grid.node_count)
    out[region.mask] = vals
    return ScalarField(grid, out)


def field_norms(f: ScalarField, region: RegionMask | None = None) -> tuple[float, float]:
    """(sup norm, h-weighted discrete L2 norm) of ``f`` over ``region``."""
    region = f.grid.everywhere if region is None else region
    if region.count == 0:
        raise ValueError("cannot take norms over an empty region")
    v = f.values[region.mask]
    return float(np.max(np.abs(v))), float(np.sqrt(f.grid.h * np.dot(v, v)))


def write_columns_csv(path, columns: dict) -> None:
    """Write equally long numeric columns with 17 significant digits."""
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def read_field_csv(grid: Grid, path) -> ScalarField:
    """Read a two-column (x, value) CSV written by ``ScalarField.to_csv``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != grid.node_count or not np.allclose(data[:, 0], grid.x, atol=1e-12):
        raise ValueError(f"{path}: x column does not match the grid nodes")
    return ScalarField(grid, data[:, 1])
