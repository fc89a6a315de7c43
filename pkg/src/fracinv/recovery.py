"""Pointwise reconstruction of the nonlinearity and source from solution fields.

Every routine here consumes interior solution fields. Two problems with the
same exterior Cauchy data share their solutions (unique continuation for the
fractional Laplacian), so the fields stand in for the measured data; that
bridge is not constructive and is only checked through round trips.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla

from . import kernels
from .forward import PolynomialNonlinearity, _linear_solve
from .grid import Grid, ScalarField, write_columns_csv
from .operator import NonlocalStiffness

# a node is masked when its geometric-mean solution gap falls below
# MASK_TOL times the largest input amplitude
MASK_TOL = 1e-3
SIGN_TOL = 1e-12


class RecoveryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class VandermondeSystem:
    """Per-node systems sum_k a^(k) u_l^k - F = -(A u_l)_i, one row per solution.

    ``matrices`` has shape (nodes, N+1, N+1) with rows [u, u^2, ..., u^N, -1]
    in canonical (ascending u) order; ``rhs`` matches it.
    """

    nodes: np.ndarray
    values: np.ndarray
    matrices: np.ndarray
    rhs: np.ndarray

    @property
    def degree(self) -> int:
        return self.matrices.shape[1] - 1

    def determinant(self) -> np.ndarray:
        return np.abs(kernels.vandermonde_products(self.values))

    def reduced_matrices(self) -> np.ndarray:
        """Rows l = 1..N minus row 0 on the monomial columns (the N x N matrix U)."""
        m = self.matrices[:, :, :-1]
        return m[:, 1:, :] - m[:, :1, :]


@dataclass(eq=False)
class RecoveryReport:
    grid: Grid
    coefficients: list
    source: np.ndarray
    det: np.ndarray
    mask: np.ndarray
    cond: np.ndarray
    noise_level: float = 0.0
    consistency: float = 0.0
    errors: dict = field(default_factory=dict)

    @property
    def degree(self) -> int:
        return len(self.coefficients)

    @property
    def interior(self) -> np.ndarray:
        return self.grid.interior.mask

    @property
    def unmasked(self) -> np.ndarray:
        return self.interior & ~self.mask

    @property
    def masked_fraction(self) -> float:
        return float(self.mask[self.interior].mean())

    def coefficient(self, k: int) -> np.ndarray:
        return self.coefficients[k - 1]

    def _fill(self, vals):
        x = self.grid.x
        good = self.unmasked
        out = np.zeros_like(vals)
        if not good.any():
            raise RecoveryError("every node is masked")
        inner = self.interior
        out[inner] = np.interp(x[inner], x[good], vals[good])
        return out

    def filled(self) -> tuple[PolynomialNonlinearity, ScalarField]:
        """Recovered (a, F) with masked nodes linearly interpolated."""
        a = PolynomialNonlinearity(tuple(ScalarField(self.grid, self._fill(c)) for c in self.coefficients))
        return a, ScalarField(self.grid, self._fill(self.source))

    def compare(self, truth_a: Sequence, truth_F) -> dict:
        """Relative sup errors at unmasked nodes (absolute when the truth is zero)."""
        good = self.unmasked
        errs = {}
        truths = [_values(t) for t in truth_a] + [_values(truth_F)]
        names = [f"a{k}" for k in range(1, len(truth_a) + 1)] + ["F"]
        for name, rec, tr in zip(names, self.coefficients + [self.source], truths):
            if rec is None:
                continue
            scale = float(np.max(np.abs(tr[self.interior])))
            diff = float(np.max(np.abs(rec[good] - tr[good]))) if good.any() else float("nan")
            errs[name] = diff / scale if scale > 0 else diff
        self.errors = errs
        return errs

    def columns(self, truth_a=None, truth_F=None) -> dict:
        cols = {"x": self.grid.x}
        for k, c in enumerate(self.coefficients, 1):
            cols[f"a{k}"] = c
        cols["F"] = self.source
        cols["det"] = self.det
        cols["cond"] = self.cond
        cols["masked"] = self.mask
        if truth_a is not None:
            for k, t in enumerate(truth_a, 1):
                cols[f"err_a{k}"] = self.coefficients[k - 1] - _values(t)
        if truth_F is not None:
            cols["err_F"] = self.source - _values(truth_F)
        return cols

    def to_csv(self, path, truth_a=None, truth_F=None) -> None:
        write_columns_csv(path, self.columns(truth_a, truth_F))

    def summary(self) -> dict:
        return {
            "degree": self.degree,
            "masked_fraction": self.masked_fraction,
            "noise_level": self.noise_level,
            "consistency": self.consistency,
            "errors": dict(self.errors),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _values(f):
    return f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)


def _action(A, u: ScalarField) -> np.ndarray:
    if not A.grid.same_as(u.grid):
        raise ValueError("operator and field live on different grids")
    return A.matvec(u.values)


def _blank(grid):
    return np.full(grid.node_count, np.nan)


def _amplitude(A, fields) -> float:
    ext = A.grid.exterior.mask
    return max(float(np.max(np.abs(f.values[ext]))) for f in fields)


def _noisy(rhs, level, rng):
    if level == 0:
        return rhs
    scale = float(np.max(np.abs(rhs)))
    return rhs + level * scale * rng.uniform(-1.0, 1.0, rhs.size)


def recover_source_passive(A: NonlocalStiffness, u0: ScalarField,
                           a: PolynomialNonlinearity | None = None) -> ScalarField:
    """F = A u0 + a(x, u0) on omega, zero elsewhere."""
    vals = _action(A, u0)
    if a is not None:
        vals = vals + a.value(u0.values)
    out = np.where(A.grid.interior.mask, vals, 0.0)
    return ScalarField(A.grid, out)


def recover_linear_two(A: NonlocalStiffness, u: ScalarField, u0: ScalarField,
                       mask_tol: float = MASK_TOL, noise: float = 0.0, seed: int = 0) -> RecoveryReport:
    """a^(1) and F from an active and a passive solution of (A + a^(1)) u = F."""
    g = A.grid
    inner = g.interior.mask
    v = u.values - u0.values
    if not np.any(v[inner]):
        raise RecoveryError("active and passive solutions coincide on omega (input f is zero)")
    rng = np.random.default_rng(seed)
    Au = _noisy(_action(A, u)[inner], noise, rng)
    Au0 = _noisy(_action(A, u0)[inner], noise, rng)
    amp = _amplitude(A, [u, u0])
    vi = v[inner]
    mask_i = np.abs(vi) < mask_tol * amp
    a1 = _blank(g)
    F = _blank(g)
    ok = ~mask_i
    a1_i = np.full(vi.size, np.nan)
    a1_i[ok] = -(Au[ok] - Au0[ok]) / vi[ok]
    a1[inner] = a1_i
    F[inner] = Au0 + a1_i * u0.values[inner]
    mask = np.zeros(g.node_count, dtype=bool)
    mask[inner] = mask_i
    det = _blank(g)
    det[inner] = np.abs(vi)
    cond = _blank(g)
    cond[inner] = np.where(ok, 1.0, np.inf)
    return RecoveryReport(g, [a1], F, det, mask, cond, noise)


def build_vandermonde_system(A: NonlocalStiffness, solutions: Sequence[ScalarField], degree: int,
                             noise: float = 0.0, seed: int = 0) -> VandermondeSystem:
    g = A.grid
    inner = g.interior.mask
    nodes = np.flatnonzero(inner)
    rng = np.random.default_rng(seed)
    u = np.stack([s.values[inner] for s in solutions], axis=1)
    rhs = np.stack([-_noisy(_action(A, s)[inner], noise, rng) for s in solutions], axis=1)
    # canonical row order per node: ascending u, ties by rhs
    order = _row_order(u, rhs)
    u = np.take_along_axis(u, order, axis=1)
    rhs = np.take_along_axis(rhs, order, axis=1)
    powers = np.stack([u**k for k in range(1, degree + 1)], axis=2)
    mats = np.concatenate([powers, -np.ones(u.shape + (1,))], axis=2)
    return VandermondeSystem(nodes, u, np.ascontiguousarray(mats), np.ascontiguousarray(rhs))


def _row_order(u, rhs):
    out = np.empty(u.shape, dtype=np.intp)
    for i in range(u.shape[0]):
        out[i] = np.lexsort((rhs[i], u[i]))
    return out


def recover_polynomial(A: NonlocalStiffness, solutions: Sequence[ScalarField], degree: int | None = None,
                       mask_tol: float = MASK_TOL, noise: float = 0.0, seed: int = 0) -> RecoveryReport:
    """Recover a^(1..N) and F from N+1 solutions with pairwise distinct exterior inputs."""
    sols = list(solutions)
    n = len(sols) - 1 if degree is None else int(degree)
    if n < 1:
        raise RecoveryError("degree must be at least 1")
    if len(sols) < n + 1:
        raise RecoveryError(f"need {n + 1} solutions for degree {n}, got {len(sols)}")
    sols = sols[: n + 1]
    g = A.grid
    inner = g.interior.mask
    ref = sols[0].values
    if all(np.array_equal(s.values, ref) for s in sols[1:]):
        raise RecoveryError("all solutions are identical")

    system = build_vandermonde_system(A, sols, n, noise, seed)
    x, _ = kernels.solve_small_batched(system.matrices, system.rhs)
    det_i = system.determinant()
    pairs = n * (n + 1) // 2
    amp = _amplitude(A, sols)
    mask_i = ~(det_i >= (mask_tol * amp) ** pairs) | ~np.all(np.isfinite(x), axis=1)
    with np.errstate(invalid="ignore", over="ignore"):
        cond_i = np.linalg.cond(system.matrices)
    cond_i[mask_i] = np.inf

    coeffs = []
    for k in range(n):
        c = _blank(g)
        ck = x[:, k].copy()
        ck[mask_i] = np.nan
        c[inner] = ck
        coeffs.append(c)

    # F last, from the passive equation (the input that vanishes outside omega)
    ext = g.exterior.mask
    passive = [s for s in sols if not np.any(s.values[ext])]
    base = passive[0] if passive else min(sols, key=lambda s: float(np.max(np.abs(s.values[ext]))))
    u_b = base.values[inner]
    F_i = _action(A, base)[inner] + sum(x[:, k - 1] * u_b**k for k in range(n, 0, -1))
    F_i[mask_i] = np.nan
    F = _blank(g)
    F[inner] = F_i
    F_alt = x[:, n]
    consistency = float(np.max(np.abs(F_alt[~mask_i] - F_i[~mask_i]))) if (~mask_i).any() else 0.0

    mask = np.zeros(g.node_count, dtype=bool)
    mask[inner] = mask_i
    det = _blank(g)
    det[inner] = det_i
    cond = _blank(g)
    cond[inner] = cond_i
    return RecoveryReport(g, coeffs, F, det, mask, cond, noise, consistency)


class VandermondeDet(NamedTuple):
    product: float
    direct: float


def vandermonde_det(values: Sequence[float]) -> VandermondeDet:
    """prod_{0<=l<m<=N} (u_m - u_l) and det of U[l-1, k-1] = u_l^k - u_0^k."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("need a one-dimensional list of values")
    n = v.size - 1
    product = float(kernels.vandermonde_products(v[None, :])[0])
    if n == 0:
        return VandermondeDet(product, 1.0)
    k = np.arange(1, n + 1)
    U = v[1:, None] ** k[None, :] - v[0] ** k[None, :]
    return VandermondeDet(product, float(np.linalg.det(U)))


def recover_quadratic_two(A: NonlocalStiffness, u: ScalarField, u0: ScalarField,
                          mask_tol: float = MASK_TOL, noise: float = 0.0, seed: int = 0) -> RecoveryReport:
    """a^(2) and F for (A u) + a^(2) u^2 = F from one active and one passive solution.

    Requires nonpositive exterior input (not identically zero) and, as the
    comparison principle then guarantees, nonpositive solutions on omega.
    """
    g = A.grid
    inner, ext = g.interior.mask, g.exterior.mask
    f = u.values[ext]
    if np.any(f > 0):
        raise RecoveryError("exterior input must be nonpositive")
    if not np.any(f < 0):
        raise RecoveryError("exterior input is identically zero")
    if np.any(u0.values[ext] != 0):
        raise RecoveryError("second solution must be passive (zero exterior data)")
    if np.max(u.values[inner]) > SIGN_TOL or np.max(u0.values[inner]) > SIGN_TOL:
        raise RecoveryError("solutions are not nonpositive on omega; sign hypotheses violated")
    if np.array_equal(u.values, u0.values):
        raise RecoveryError("active and passive solutions coincide")

    rng = np.random.default_rng(seed)
    Au = _noisy(_action(A, u)[inner], noise, rng)
    Au0 = _noisy(_action(A, u0)[inner], noise, rng)
    ui, u0i = u.values[inner], u0.values[inner]
    denom = (ui - u0i) * (ui + u0i)
    amp = _amplitude(A, [u, u0])
    mask_i = np.abs(ui - u0i) < mask_tol * amp
    ok = ~mask_i
    a2_i = np.full(ui.size, np.nan)
    a2_i[ok] = -(Au[ok] - Au0[ok]) / denom[ok]
    F0 = Au0 + a2_i * u0i**2
    F1 = Au + a2_i * ui**2
    consistency = float(np.max(np.abs(F1[ok] - F0[ok]))) if ok.any() else 0.0

    a2 = _blank(g)
    a2[inner] = a2_i
    F = _blank(g)
    F[inner] = F0
    mask = np.zeros(g.node_count, dtype=bool)
    mask[inner] = mask_i
    det = _blank(g)
    det[inner] = np.abs(denom)
    cond = _blank(g)
    cond[inner] = np.where(ok, 1.0, np.inf)
    zero = np.where(inner, 0.0, np.nan)
    return RecoveryReport(g, [zero, a2], F, det, mask, cond, noise, consistency)


@dataclass(frozen=True, eq=False)
class RungeResult:
    exterior: ScalarField
    coefficients: np.ndarray
    residual: float
    approximant: ScalarField


def runge_approximate(A: NonlocalStiffness, a1, target: ScalarField, dofs: int,
                      order: str = "natural") -> RungeResult:
    """Least-squares exterior data on W1 whose solution best matches ``target`` in L2(omega).

    The basis is the nodal hat functions on the first ``dofs`` W1 nodes,
    taken left to right; ``order="spread"`` enumerates them coarse-to-fine
    instead. Either way the bases are nested, so the residual cannot grow
    with ``dofs``.
    """
    g = A.grid
    w1 = g.window1.indices
    if dofs < 1 or dofs > w1.size:
        raise ValueError(f"dofs must lie in [1, {w1.size}]")
    chosen = w1[_node_order(w1.size, order)[:dofs]]
    inner = g.interior.mask
    t = target.values[inner]
    h = g.h
    ext_idx = A.exterior_idx
    q = _potential_values(A, a1)
    cols = []
    for j in chosen:
        f = np.zeros(ext_idx.size)
        f[np.searchsorted(ext_idx, j)] = 1.0
        v, _, _ = _linear_solve(A, q, np.zeros(q.size), f)
        cols.append(v)
    V = np.sqrt(h) * np.stack(cols, axis=1)
    coef, *_ = sla.lstsq(V, np.sqrt(h) * t, lapack_driver="gelsd")
    ext_vals = np.zeros(g.node_count)
    ext_vals[chosen] = coef
    approx = np.zeros(g.node_count)
    approx[inner] = (V @ coef) / np.sqrt(h)
    approx[~inner] = ext_vals[~inner]
    res = float(np.sqrt(h * np.sum((approx[inner] - t) ** 2)))
    return RungeResult(ScalarField(g, ext_vals), coef, res, ScalarField(g, approx))


def _node_order(n, order):
    if order == "natural":
        return np.arange(n)
    if order != "spread":
        raise ValueError(f"unknown node order {order!r}")
    # van der Corput points 0, 1, 1/2, 1/4, 3/4, ... snapped to nodes
    out, seen = [], set()
    for t in _corput(4 * n):
        k = int(round(t * (n - 1)))
        if k not in seen:
            seen.add(k)
            out.append(k)
    out.extend(k for k in range(n) if k not in seen)
    return np.array(out[:n])


def _corput(count):
    yield 0.0
    yield 1.0
    for i in range(1, count):
        t, denom = 0.0, 1.0
        while i:
            denom *= 2.0
            i, bit = divmod(i, 2)
            t += bit / denom
        yield t


def _potential_values(A, a1):
    i = A.interior_idx
    if a1 is None:
        return np.zeros(i.size)
    if isinstance(a1, ScalarField):
        return a1.values[i]
    return np.broadcast_to(np.asarray(a1, dtype=float), i.shape).copy()


def second_order_difference(A: NonlocalStiffness, a: PolynomialNonlinearity, b: PolynomialNonlinearity,
                            u0: ScalarField, v1: ScalarField) -> ScalarField:
    """w_a - w_b for two nonlinearities sharing u0 and d_u a(x, u0)."""
    from .forward import second_linearization_residual

    return second_linearization_residual(A, a, u0, v1) - second_linearization_residual(A, b, u0, v1)


def verify_second_order_identity(A: NonlocalStiffness, a: PolynomialNonlinearity, u0: ScalarField,
                                 v1: ScalarField, v2: ScalarField, w_diff: ScalarField) -> float:
    """|h sum_omega [(A + d_u a(x, u0)) w_diff] v2|.

    Vanishes when the two nonlinearities behind ``w_diff`` share their second
    u-derivative at u0; it equals |h sum d2a_diff v1^2 v2| otherwise.
    """
    if not np.any(v1.values):
        return 0.0
    g = A.grid
    i = A.interior_idx
    lhs = A.matvec(w_diff.values)[i] + a.du(u0.values)[i] * w_diff.values[i]
    return float(abs(g.h * np.dot(lhs, v2.values[i])))
