"""Eigenvalues of the non-anticoercive Hénon-Lane-Emden system."""

from .grid import Grid, GridError, assemble_laplacian, build_grid, weight_vector, weighted_norm
from .kernels import BACKEND
from .linear import (ConvergenceError, ThresholdError, assemble_pencil, compute_spectrum,
                     recover_pair, system_residuals)
from .nonlinear import inverse_iteration, principal_pair, rayleigh_quotient
from .poisson import Cascade, OperatorError, cascade_solve, solve_poisson
from .problem import (Ball, Interval, ProblemSpec, Rectangle, derive_exponents,
                      split_eigenvalue, validate)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Ball", "Cascade", "ConvergenceError", "Grid", "GridError", "Interval",
    "OperatorError", "ProblemSpec", "Rectangle", "ThresholdError", "assemble_laplacian",
    "assemble_pencil", "build_grid", "cascade_solve", "compute_spectrum", "derive_exponents",
    "inverse_iteration", "principal_pair", "rayleigh_quotient", "recover_pair", "solve_poisson",
    "split_eigenvalue", "system_residuals", "validate", "weight_vector", "weighted_norm",
]
