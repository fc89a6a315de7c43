"""Linear and semilinear fractional Dirichlet problems on the lattice.

All problems have the form

    (A u)_i + a(x_i, u_i) = F_i   at interior nodes,
    u = f                         at exterior nodes,

with a(x, u) = sum_{k>=1} a^(k)(x) u^k and f supported in the window W1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .grid import ScalarField, field_norms
from .operator import NonlocalStiffness

EIG_TOL = 1e-8
RESIDUAL_TOL = 1e-10
MAX_NEWTON = 50
SMALLNESS_SOURCE = 0.1
SMALLNESS_EXTERIOR = 0.1


class SolverError(RuntimeError):
    pass


class EigenvalueConditionError(SolverError):
    def __init__(self, lam):
        super().__init__(f"0 is (numerically) a Dirichlet eigenvalue: lambda_min = {lam:.3e}")
        self.lam = lam


class NewtonDivergence(SolverError):
    def __init__(self, msg, history):
        super().__init__(f"{msg}; residual history: {['%.3e' % r for r in history]}")
        self.history = list(history)


class SmallnessError(SolverError):
    pass


@dataclass(frozen=True, eq=False)
class PolynomialNonlinearity:
    """a(x, u) = sum_{k=1..N} a^(k)(x) u^k; ``coefficients[k-1]`` holds a^(k)."""

    coefficients: tuple

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(self.coefficients))

    @classmethod
    def zero(cls, grid, degree=1):
        return cls(tuple(grid.zeros() for _ in range(degree)))

    @classmethod
    def quadratic(cls, a2: ScalarField):
        return cls((a2.grid.zeros(), a2))

    @property
    def degree(self) -> int:
        return len(self.coefficients)

    def coefficient(self, k: int) -> np.ndarray:
        return self.coefficients[k - 1].values

    def value(self, u):
        # Horner in u
        out = np.zeros_like(u)
        for k in range(self.degree, 0, -1):
            out = (out + self.coefficient(k)) * u
        return out

    def du(self, u):
        out = np.zeros_like(u)
        for k in range(self.degree, 0, -1):
            out = out * u + k * self.coefficient(k)
        return out

    def d2u(self, u):
        out = np.zeros_like(u)
        for k in range(self.degree, 1, -1):
            out = out * u + k * (k - 1) * self.coefficient(k)
        return out


@dataclass(frozen=True)
class EigenvalueCheck:
    value: float
    holds: bool
    iterations: int


@dataclass(frozen=True, eq=False)
class SolveReport:
    u: ScalarField
    iterations: int
    residuals: list = field(default_factory=list)
    eigenvalue: float = float("nan")
    eigenvalue_ok: bool = True
    small_data: bool = True
    residual_floor: float = 0.0

    @property
    def residual(self) -> float:
        return self.residuals[-1]

    def summary(self) -> dict:
        return {
            "iterations": self.iterations,
            "residuals": [float(r) for r in self.residuals],
            "eigenvalue_min": float(self.eigenvalue),
            "eigenvalue_condition": bool(self.eigenvalue_ok),
            "smallness": bool(self.small_data),
            "residual_floor": float(self.residual_floor),
        }


@dataclass(frozen=True, eq=False)
class ForwardProblem:
    A: NonlocalStiffness
    nonlinearity: PolynomialNonlinearity
    source: ScalarField | None = None
    exterior: ScalarField | None = None
    eps0: float = SMALLNESS_SOURCE
    delta0: float = SMALLNESS_EXTERIOR

    def __post_init__(self):
        # None stands for zero data
        if self.source is None:
            object.__setattr__(self, "source", self.A.grid.zeros())
        if self.exterior is None:
            object.__setattr__(self, "exterior", self.A.grid.zeros())

    @property
    def grid(self):
        return self.A.grid

    def smallness(self) -> tuple[float, float]:
        g = self.grid
        return field_norms(self.source, g.interior)[0], field_norms(self.exterior, g.exterior)[0]

    def is_small(self) -> bool:
        F, f = self.smallness()
        return F < self.eps0 and f < self.delta0


def _potential(A, a1):
    if a1 is None:
        return np.zeros(A.interior_idx.size)
    if isinstance(a1, ScalarField):
        return a1.values[A.interior_idx]
    return np.broadcast_to(np.asarray(a1, dtype=float), A.interior_idx.shape).copy()


def _factor(B):
    try:
        lu = sla.lu_factor(B, check_finite=True)
    except (ValueError, sla.LinAlgError):
        return None
    if not np.all(np.isfinite(lu[0])) or np.any(np.diag(lu[0]) == 0.0):
        return None
    return lu


def _inverse_iteration(B, lu, max_iter=200, tol=1e-10):
    n = B.shape[0]
    # deterministic start with no special symmetry
    x = np.linspace(1.0, 2.0, n)
    x /= np.linalg.norm(x)
    lam = float(x @ B @ x)
    for it in range(1, max_iter + 1):
        y = sla.lu_solve(lu, x)
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0.0:
            return 0.0, it
        y /= ny
        # fix the sign so the change test is meaningful
        if y @ x < 0:
            y = -y
        lam = float(y @ B @ y)
        if np.linalg.norm(y - x) < tol:
            return lam, it
        x = y
    return lam, max_iter


def check_eigenvalue_condition(A: NonlocalStiffness, a1=None, tol: float = EIG_TOL) -> EigenvalueCheck:
    """Smallest-modulus eigenvalue of A_OO + diag(a1) by shifted-zero inverse iteration."""
    B = A.interior_block() + np.diag(_potential(A, a1))
    lu = _factor(B)
    if lu is None:
        return EigenvalueCheck(0.0, False, 0)
    lam, it = _inverse_iteration(B, lu)
    return EigenvalueCheck(lam, abs(lam) > tol, it)


def _exterior_values(A, f):
    g = A.grid
    if f is None:
        return np.zeros(A.exterior_idx.size)
    if not g.same_as(f.grid):
        raise ValueError("exterior data lives on a different grid")
    off = f.values[~g.window1.mask & ~g.interior.mask]
    if np.any(off != 0.0):
        raise ValueError("exterior data must be supported in W1")
    return f.values[A.exterior_idx]


def _assemble_solution(A, u_int, f_ext):
    u = np.zeros(A.grid.node_count)
    u[A.interior_idx] = u_int
    u[A.exterior_idx] = f_ext
    return ScalarField(A.grid, u)


def _interior(A, F):
    if F is None:
        return np.zeros(A.interior_idx.size)
    if not A.grid.same_as(F.grid):
        raise ValueError("source lives on a different grid")
    return F.values[A.interior_idx]


def _linear_solve(A, q, rhs, f_ext):
    """Solve (A_OO + diag q) u = rhs - A_Oe f after verifying invertibility."""
    B = A.interior_block() + np.diag(q)
    lu = _factor(B)
    if lu is None:
        raise EigenvalueConditionError(0.0)
    lam, _ = _inverse_iteration(B, lu)
    if abs(lam) <= EIG_TOL:
        raise EigenvalueConditionError(lam)
    b = rhs - A.coupling_block() @ f_ext
    u = sla.lu_solve(lu, b)
    r = B @ u - b
    # one step of refinement keeps the residual at roundoff level
    u = u - sla.lu_solve(lu, r)
    res = float(np.max(np.abs(B @ u - b))) if u.size else 0.0
    return u, res, lam


def solve_linear(A: NonlocalStiffness, a1=None, F: ScalarField | None = None,
                 f: ScalarField | None = None) -> SolveReport:
    """Solve (A + a1) u = F in omega, u = f outside."""
    q = _potential(A, a1)
    f_ext = _exterior_values(A, f)
    u_int, res, lam = _linear_solve(A, q, _interior(A, F), f_ext)
    return SolveReport(_assemble_solution(A, u_int, f_ext), 0, [res], lam, True, True)


def semilinear_residual(A, a: PolynomialNonlinearity, F: ScalarField, u: ScalarField) -> np.ndarray:
    i = A.interior_idx
    uu = u.values
    return (A.matrix[i] @ uu) + a.value(uu)[i] - F.values[i]


def residual_floor(A, a: PolynomialNonlinearity, F: ScalarField, u: ScalarField) -> float:
    """Roundoff level of the interior residual evaluated at ``u``."""
    i = A.interior_idx
    uu = np.abs(u.values)
    scale = np.abs(A.matrix[i]) @ uu + np.abs(a.value(u.values)[i]) + np.abs(F.values[i])
    return float(64 * np.finfo(float).eps * np.max(scale)) if scale.size else 0.0


def solve_semilinear(P: ForwardProblem, tol: float = RESIDUAL_TOL, max_iter: int = MAX_NEWTON,
                     override_smallness: bool = False, polish: int = 0) -> SolveReport:
    """Newton iteration from the linearisation at u = 0.

    ``polish`` extra Newton steps are taken after the tolerance is met; they
    push the residual to roundoff, which pointwise recovery needs.
    """
    A, a = P.A, P.nonlinearity
    small = P.is_small()
    if not small and not override_smallness:
        Fn, fn = P.smallness()
        raise SmallnessError(
            f"data outside the well-posedness ball: |F|={Fn:.3g} (eps0={P.eps0}), "
            f"|f|={fn:.3g} (delta0={P.delta0})"
        )
    i = A.interior_idx
    a1 = a.coefficient(1)[i] if a.degree >= 1 else np.zeros(i.size)
    f_ext = _exterior_values(A, P.exterior)
    F_int = _interior(A, P.source)
    u_int, _, lam = _linear_solve(A, a1, F_int, f_ext)
    u = _assemble_solution(A, u_int, f_ext)

    K = A.interior_block()
    history = []
    it = 0
    while True:
        r = semilinear_residual(A, a, P.source, u)
        rn = float(np.max(np.abs(r))) if r.size else 0.0
        history.append(rn)
        if not np.isfinite(rn):
            raise NewtonDivergence("non-finite residual", history)
        if rn <= tol:
            if polish <= 0 or rn == 0.0:
                break
            polish -= 1
        if it >= max_iter:
            raise NewtonDivergence(f"no convergence in {max_iter} iterations", history)
        J = K + np.diag(a.du(u.values)[i])
        try:
            step = sla.solve(J, r, assume_a="gen", check_finite=True)
        except (sla.LinAlgError, ValueError) as exc:
            raise SolverError(f"singular Jacobian at Newton iteration {it}") from exc
        vals = u.values.copy()
        vals[i] -= step
        u = ScalarField(A.grid, vals)
        it += 1
    return SolveReport(u, it, history, lam, True, small, residual_floor(A, a, P.source, u))


def solve_first_linearization(A: NonlocalStiffness, a: PolynomialNonlinearity, u0: ScalarField,
                              g: ScalarField) -> ScalarField:
    """v with (A + d_u a(x, u0)) v = 0 in omega, v = g outside."""
    q = a.du(u0.values)[A.interior_idx]
    f_ext = _exterior_values(A, g)
    v, _, _ = _linear_solve(A, q, np.zeros(q.size), f_ext)
    return _assemble_solution(A, v, f_ext)


def second_linearization_residual(A: NonlocalStiffness, a: PolynomialNonlinearity, u0: ScalarField,
                                  v1: ScalarField) -> ScalarField:
    """w with (A + d_u a(x, u0)) w = -d_u^2 a(x, u0) v1^2 in omega, w = 0 outside.

    For f = eps g this is the second eps-derivative of the solution at eps = 0.
    """
    i = A.interior_idx
    q = a.du(u0.values)[i]
    rhs = -(a.d2u(u0.values) * v1.values**2)[i]
    w, _, _ = _linear_solve(A, q, rhs, np.zeros(A.exterior_idx.size))
    return _assemble_solution(A, w, np.zeros(A.exterior_idx.size))
