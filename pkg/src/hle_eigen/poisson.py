"""Dirichlet Poisson solves and the two-step cascade.

The cascade maps ``f`` to the pair ``(u, v)`` with

    -Δ_h v = |x|^b |f|^{p-2} f,    -Δ_h u = |x|^a |v|^{p'-2} v,

pointwise at the nodes. It is 1-homogeneous in ``f``, which is what the
inverse iteration in :mod:`hle_eigen.nonlinear` relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as sla

from . import kernels
from .grid import DiscreteOperator, Grid, assemble_laplacian
from .problem import ProblemSpec, validate

__all__ = [
    "OperatorError",
    "PoissonSolver",
    "PoissonSolution",
    "CascadePair",
    "solve_poisson",
    "cascade_solve",
    "Cascade",
]

class OperatorError(RuntimeError):
    """The operator could not be factorized (singular or indefinite)."""


@dataclass(frozen=True)
class PoissonSolution:
    """``residual_inf`` is ``max|A u - f|``; ``backward_error`` divides it by
    ``||A||_inf ||u||_inf + ||f||_inf``, which stays near machine precision
    on fine grids where ``||A||`` grows like ``h^-2``."""

    u: np.ndarray
    residual_inf: float
    backward_error: float


class PoissonSolver:
    """Factorization of a Dirichlet Laplacian, reusable across right-hand sides.

    Tridiagonal operators go through :class:`kernels.TridiagonalSolver`;
    anything else through a sparse LU. Solving is reentrant.
    """

    def __init__(self, op: DiscreteOperator):
        self.op = op
        mat = op.matrix
        diag = mat.diagonal()
        if np.any(diag <= 0):
            raise OperatorError("non-positive diagonal; not a Dirichlet Laplacian")
        try:
            if op.bands is not None:
                self._tri = kernels.TridiagonalSolver(*op.bands)
                self._lu = None
            else:
                self._tri = None
                self._lu = sla.splu(mat.tocsc())
        except (ZeroDivisionError, RuntimeError) as exc:
            raise OperatorError(f"factorization failed: {exc}") from exc

    def solve(self, f) -> np.ndarray:
        f = np.ascontiguousarray(f, dtype=np.float64)
        if self._tri is not None:
            u = self._tri.solve(f)
        else:
            u = self._lu.solve(f)
        if not np.all(np.isfinite(u)):
            raise OperatorError("non-finite solution; operator is singular")
        return u

    def solve_many(self, F) -> np.ndarray:
        """Solve for every column of ``F``."""
        F = np.asarray(F, dtype=np.float64)
        if self._lu is not None:
            return self._lu.solve(F)
        return np.column_stack([self._tri.solve(np.ascontiguousarray(c)) for c in F.T])

    def residual_inf(self, u, f) -> float:
        return float(np.max(np.abs(self.op.matrix @ u - f), initial=0.0))


def solve_poisson(op: DiscreteOperator, f, solver: PoissonSolver | None = None) -> PoissonSolution:
    """Solve ``A u = f`` and report the max-norm residual."""
    solver = solver or PoissonSolver(op)
    f = np.asarray(f, dtype=np.float64)
    u = solver.solve(f)
    res = solver.residual_inf(u, f)
    anorm = float(abs(op.matrix).sum(axis=1).max())
    denom = anorm * float(np.max(np.abs(u), initial=0.0)) + float(np.max(np.abs(f), initial=0.0))
    return PoissonSolution(u=u, residual_inf=res, backward_error=res / denom if denom else 0.0)


@dataclass(frozen=True)
class CascadePair:
    u: np.ndarray
    v: np.ndarray
    residual_u: float
    residual_v: float


class Cascade:
    """Reusable cascade operator for one (spec, grid) pair."""

    def __init__(self, spec: ProblemSpec, grid: Grid, op: DiscreteOperator | None = None,
                 solver: PoissonSolver | None = None):
        self.spec = spec
        self.grid = grid
        self.op = op if op is not None else assemble_laplacian(grid)
        self.solver = solver or PoissonSolver(self.op)
        self.wa = np.ascontiguousarray(grid.power_of_radius(spec.a))
        self.wb = np.ascontiguousarray(grid.power_of_radius(spec.b))

    def __call__(self, f):
        """Return ``(u, v)``; no residuals, for use in tight loops."""
        p = self.spec.p
        f = np.ascontiguousarray(f, dtype=np.float64)
        g1 = self.wb * f if p == 2.0 else kernels.signed_power(f, p, self.wb)
        v = self.solver.solve(g1)
        g2 = self.wa * v if p == 2.0 else kernels.signed_power(v, self.spec.p_conj, self.wa)
        u = self.solver.solve(g2)
        return u, v

    def solve(self, f) -> CascadePair:
        p = self.spec.p
        f = np.asarray(f, dtype=np.float64)
        u, v = self(f)
        g1 = kernels.signed_power(np.ascontiguousarray(f), p, self.wb)
        g2 = kernels.signed_power(v, self.spec.p_conj, self.wa)
        rv = self.solver.residual_inf(v, g1) / max(1.0, float(np.max(np.abs(g1), initial=0.0)))
        ru = self.solver.residual_inf(u, g2) / max(1.0, float(np.max(np.abs(g2), initial=0.0)))
        return CascadePair(u=u, v=v, residual_u=ru, residual_v=rv)


def cascade_solve(spec: ProblemSpec, grid: Grid, f, op: DiscreteOperator | None = None) -> CascadePair:
    """Solve the cascade for a single right-hand side ``f``."""
    report = validate(spec)
    if not report.admissible:
        raise ValueError(report.message())
    return Cascade(spec, grid, op).solve(f)
