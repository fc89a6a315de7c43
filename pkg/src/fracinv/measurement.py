"""Exterior Cauchy data: inputs on W1, fractional Laplacian on W2."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .grid import Grid, ScalarField, field_from_function
from .operator import NonlocalStiffness

PASSIVE = "passive"
ACTIVE = "active"


@dataclass(frozen=True, eq=False)
class CauchyPair:
    dirichlet: np.ndarray
    neumann: np.ndarray
    tag: str = ACTIVE
    input_id: int = 0

    def to_dict(self, grid: Grid) -> dict:
        return {
            "input_id": self.input_id,
            "tag": self.tag,
            "w1_nodes": grid.window1.indices.tolist(),
            "dirichlet": [float(v) for v in self.dirichlet],
            "w2_nodes": grid.window2.indices.tolist(),
            "neumann": [float(v) for v in self.neumann],
        }


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    grid: Grid
    pairs: tuple
    inputs: tuple = ()
    noise_level: float = 0.0
    separation: float = 0.0

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, k):
        return self.pairs[k]

    def to_json(self) -> str:
        doc = {
            "noise_level": self.noise_level,
            "separation": self.separation,
            "pairs": [p.to_dict(self.grid) for p in self.pairs],
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, grid: Grid, text: str) -> "MeasurementSet":
        doc = json.loads(text)
        pairs = []
        for p in doc["pairs"]:
            if p["w1_nodes"] != grid.window1.indices.tolist() or p["w2_nodes"] != grid.window2.indices.tolist():
                raise ValueError("measurement node lists do not match the grid windows")
            pairs.append(CauchyPair(np.array(p["dirichlet"]), np.array(p["neumann"]),
                                    p.get("tag", ACTIVE), int(p["input_id"])))
        return cls(grid, tuple(pairs), (), float(doc["noise_level"]), float(doc.get("separation", 0.0)))


def take_cauchy_pair(A: NonlocalStiffness, u: ScalarField, f: ScalarField | None = None,
                     grid: Grid | None = None, input_id: int = 0) -> CauchyPair:
    grid = A.grid if grid is None else grid
    if not (grid.same_as(A.grid) and grid.same_as(u.grid)):
        raise ValueError("grid mismatch between operator, field and grid")
    dirichlet = (u if f is None else f).values[grid.window1.mask].copy()
    neumann = A.matvec(u.values)[grid.window2.mask]
    tag = PASSIVE if not np.any(dirichlet) else ACTIVE
    return CauchyPair(dirichlet, neumann, tag, input_id)


def smooth_bump(grid: Grid, window=None) -> ScalarField:
    """C-infinity bump supported in ``window`` (default W1), nodal max 1."""
    lo, hi = grid.w1 if window is None else window
    mask = grid.window1 if window is None else None

    def bump(x):
        t = (2 * np.asarray(x) - lo - hi) / (hi - lo)
        out = np.zeros_like(t)
        inside = np.abs(t) < 1
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
        return out

    g = field_from_function(grid, bump, mask)
    return g * (1.0 / np.max(g.values))


@dataclass(frozen=True, eq=False)
class ExteriorFamily:
    fields: tuple
    separation: float
    amplitude: float

    def __len__(self):
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)

    def __getitem__(self, k):
        return self.fields[k]


def synthesize_exterior_family(grid: Grid, count: int, amplitude: float,
                               bump: ScalarField | None = None, sign: float = 1.0) -> ExteriorFamily:
    """Ladder f_l = sign * (l / N) * amplitude * g, l = 0..N with N = count - 1."""
    if count < 1:
        raise ValueError("count must be at least 1")
    if count > 1 and amplitude == 0:
        raise ValueError("zero amplitude cannot give pairwise distinct inputs")
    g = smooth_bump(grid) if bump is None else bump
    if np.any(g.values < 0):
        raise ValueError("bump profile must be nonnegative")
    n = count - 1
    if n == 0:
        return ExteriorFamily((grid.zeros(),), 0.0, float(amplitude))
    sgn = 1.0 if sign >= 0 else -1.0
    peak = float(np.max(np.abs(g.values)))
    fields = tuple(g * (sgn * amplitude * l / (n * peak)) for l in range(count))
    return ExteriorFamily(fields, abs(amplitude) / n, float(amplitude))


def add_noise(m: MeasurementSet, level: float, seed: int | None = 0) -> MeasurementSet:
    """Perturb neumann data by level * |neumann|_inf * U(-1, 1), deterministic under ``seed``."""
    if level < 0:
        raise ValueError("noise level must be nonnegative")
    if level == 0:
        return replace(m, noise_level=m.noise_level)
    rng = np.random.default_rng(seed)
    pairs = []
    for p in m.pairs:
        scale = float(np.max(np.abs(p.neumann))) if p.neumann.size else 0.0
        noisy = p.neumann + level * scale * rng.uniform(-1.0, 1.0, p.neumann.size)
        pairs.append(CauchyPair(p.dirichlet.copy(), noisy, p.tag, p.input_id))
    return replace(m, pairs=tuple(pairs), noise_level=m.noise_level + level)


def measure(A: NonlocalStiffness, solutions, inputs, separation: float = 0.0) -> MeasurementSet:
    """Cauchy pairs for a list of solved fields and their exterior inputs."""
    pairs = tuple(take_cauchy_pair(A, u, f, input_id=k) for k, (u, f) in enumerate(zip(solutions, inputs)))
    return MeasurementSet(A.grid, pairs, tuple(inputs), 0.0, separation)
