"""Lattice solvers and pointwise coefficient recovery for semilinear fractional equations."""

__version__ = "0.1.0"

from .grid import Grid, GridError, ScalarField, build_grid, field_from_function  # noqa: E402
from .operator import NonlocalStiffness, assemble_operator, apply_operator  # noqa: E402
from .forward import (  # noqa: E402
    ForwardProblem,
    PolynomialNonlinearity,
    SolverError,
    solve_linear,
    solve_semilinear,
)
from .measurement import MeasurementSet, measure, synthesize_exterior_family  # noqa: E402
from .recovery import (  # noqa: E402
    RecoveryReport,
    recover_linear_two,
    recover_polynomial,
    recover_quadratic_two,
    recover_source_passive,
)

__all__ = [
    "Grid", "GridError", "ScalarField", "build_grid", "field_from_function",
    "NonlocalStiffness", "assemble_operator", "apply_operator",
    "ForwardProblem", "PolynomialNonlinearity", "SolverError", "solve_linear", "solve_semilinear",
    "MeasurementSet", "measure", "synthesize_exterior_family",
    "RecoveryReport", "recover_linear_two", "recover_polynomial", "recover_quadratic_two",
    "recover_source_passive",
]
