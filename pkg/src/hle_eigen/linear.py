"""Linear (p = 2) spectrum of the weighted Navier problem.

The discrete pencil is

    K = A^T diag(w / ρ_a) A,    B = diag(w ρ_b),

with ``ρ_t`` the cell average of ``|x|^t`` (:meth:`Grid.power_of_radius`).

with ``A = -Δ_h``. Since ``diag(w) A`` is symmetric, ``K u = μ B u`` is the
same as ``A ρ_a^{-1} A u = μ ρ_b u``, i.e. the cascade operator
``T = A^{-1} ρ_a A^{-1} ρ_b`` has eigenvalues ``1/μ``. The dense path
factors ``B^{1/2} T B^{-1/2} = C^T C`` and takes the SVD of ``C``, so the
small eigenvalues ``μ_k`` come out with relative (not ``||K||``-absolute)
accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import DiscreteOperator, Grid, assemble_laplacian, weight_vector
from .poisson import Cascade, PoissonSolver
from .problem import EigenvalueSplit, ProblemSpec, validate

__all__ = [
    "THRESHOLD_GUARD",
    "DENSE_LIMIT",
    "ThresholdError",
    "ConvergenceError",
    "GeneralizedPencil",
    "SpectrumResult",
    "assemble_pencil",
    "compute_spectrum",
    "recover_pair",
    "system_residuals",
    "sign_normalize",
]

THRESHOLD_GUARD = 1e-6
DENSE_LIMIT = 4000


class ThresholdError(ValueError):
    """Parameters sit at (or numerically on) the threshold s + b + 2p = 0."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


def sign_normalize(u):
    """Flip ``u`` so that its largest-modulus entry is positive."""
    u = np.asarray(u, dtype=np.float64)
    if u.size and u[np.argmax(np.abs(u))] < 0:
        return -u
    return u


@dataclass(eq=False)
class GeneralizedPencil:
    spec: ProblemSpec
    grid: Grid
    op: DiscreteOperator
    K: sp.csr_matrix
    B: np.ndarray  # diagonal of B

    @property
    def size(self):
        return self.B.shape[0]


def assemble_pencil(spec: ProblemSpec, grid: Grid, *, override_threshold: bool = False,
                    op: DiscreteOperator | None = None) -> GeneralizedPencil:
    """Assemble ``(K, B)`` for ``p = 2``.

    ``override_threshold`` admits the equality case ``a + b + 4 = 0`` (used
    by the Rellich estimate); the strict admissibility conditions are
    otherwise enforced.
    """
    if spec.p != 2.0:
        raise ValueError(f"the linear pencil needs p = 2, got p = {spec.p}")
    report = validate(spec)
    margin = spec.s + spec.b + 2 * spec.p
    if override_threshold:
        blocking = [c for c in report.failures
                    if c.name not in ("s+b+2p>0", "a/p'+b/p+2>0", "a+b+4>0")]
        if blocking or margin < -1e-12:
            raise ValueError(report.message())
    else:
        if not report.admissible:
            raise ValueError(report.message())
        if margin <= THRESHOLD_GUARD:
            raise ThresholdError(
                f"s+b+2p = {margin:.3g} is within {THRESHOLD_GUARD} of the threshold; "
                "the principal eigenvalue degenerates there")
    op = op if op is not None else assemble_laplacian(grid)
    A = op.matrix
    # 1/ρ_a, not ρ_{-a}: keeps the pencil equal to the cascade's inverse
    mid = sp.diags(grid.weights / grid.power_of_radius(spec.a))
    K = (A.T @ mid @ A).tocsr()
    B = np.array(weight_vector(grid, spec.b))
    return GeneralizedPencil(spec, grid, op, K, B)


@dataclass(eq=False)
class SpectrumResult:
    """Lowest eigenpairs of a pencil, sorted ascending.

    ``residuals`` are relative residuals of the inverse form
    ``||μ_k T u_k - u_k||_B / ||u_k||_B``; ``k_residuals`` are the raw
    ``||K u_k - μ_k B u_k||_2 / (μ_k ||B u_k||_2)`` (dominated by rounding in
    ``K`` on fine grids).
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray  # columns, B-orthonormal
    partners: np.ndarray  # columns v_k = μ_k A^{-1}(|x|^b u_k)
    residuals: np.ndarray
    k_residuals: np.ndarray
    grid: Grid
    spec: ProblemSpec
    method: str
    notes: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        if len(self.eigenvalues) < 2:
            return float("nan")
        return float(self.eigenvalues[1] - self.eigenvalues[0])

    @property
    def mu1(self) -> float:
        return float(self.eigenvalues[0])

    def vector(self, k: int = 0):
        return self.vectors[:, k]

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "k_residuals": [float(x) for x in self.k_residuals],
            "gap": self.gap,
            "method": self.method,
            "grid": self.grid.metadata(),
            "notes": list(self.notes),
        }


def _dense_inverse(op: DiscreteOperator) -> np.ndarray:
    N = op.shape[0]
    if op.bands is not None:
        lower, diag, upper = op.bands
        ab = np.zeros((3, N))
        ab[0, 1:] = upper[:-1]
        ab[1] = diag
        ab[2, :-1] = lower[1:]
        return sla.solve_banded((1, 1), ab, np.eye(N))
    return PoissonSolver(op).solve_many(np.eye(N))


def _spectrum_dense(pencil: GeneralizedPencil, count: int):
    grid, spec = pencil.grid, pencil.spec
    w = grid.weights
    sw = np.sqrt(w)
    Ainv = _dense_inverse(pencil.op)
    # M = W^{1/2} A^{-1} W^{-1/2} is symmetric
    M = sw[:, None] * Ainv / sw[None, :]
    M = 0.5 * (M + M.T)
    ra = np.sqrt(grid.power_of_radius(spec.a))
    rb = np.sqrt(grid.power_of_radius(spec.b))
    C = ra[:, None] * M * rb[None, :]
    _, sig, vt = sla.svd(C, full_matrices=False, lapack_driver="gesdd")
    sig = sig[:count]
    y = vt[:count].T
    mu = 1.0 / sig**2
    u = y / np.sqrt(pencil.B)[:, None]
    return mu, u


def _spectrum_iterative(pencil: GeneralizedPencil, count: int, tol: float = 1e-13):
    grid, spec = pencil.grid, pencil.spec
    cascade = Cascade(spec, grid, pencil.op)
    sb = np.sqrt(pencil.B)

    def matvec(y):
        u, _ = cascade(np.ravel(y) / sb)
        return sb * u

    N = pencil.size
    G = spla.LinearOperator((N, N), matvec=matvec, dtype=np.float64)
    v0 = np.ones(N) / np.sqrt(N)
    try:
        vals, vecs = spla.eigsh(G, k=count, which="LA", tol=tol, v0=v0,
                                maxiter=max(1000, 20 * N))
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError(
            f"Lanczos did not converge: {len(exc.eigenvalues)} of {count} pairs") from exc
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    return 1.0 / vals, vecs / sb[:, None]


def compute_spectrum(pencil: GeneralizedPencil, count: int = 1, *,
                     method: str = "auto") -> SpectrumResult:
    """Lowest ``count`` eigenpairs of ``K u = μ B u``.

    Dense SVD for at most :data:`DENSE_LIMIT` unknowns, Lanczos on the
    cascade operator beyond (or when ``method="iterative"``).
    """
    N = pencil.size
    if not 1 <= count <= N:
        raise ValueError(f"count must lie in [1, {N}], got {count}")
    if method == "auto":
        method = "dense" if N <= DENSE_LIMIT else "iterative"
    if method == "dense":
        mu, U = _spectrum_dense(pencil, count)
    elif method == "iterative":
        if count >= N - 1:
            raise ValueError("iterative path needs count < N - 1")
        mu, U = _spectrum_iterative(pencil, count)
    else:
        raise ValueError(f"unknown method {method!r}")

    grid, spec = pencil.grid, pencil.spec
    cascade = Cascade(spec, grid, pencil.op)
    U = np.array(U)
    res = np.empty(count)
    kres = np.empty(count)
    V = np.empty_like(U)
    for k in range(count):
        u = sign_normalize(U[:, k])
        u /= np.sqrt(np.dot(pencil.B, u * u))
        U[:, k] = u
        Tu, _ = cascade(u)
        r = mu[k] * Tu - u
        res[k] = np.sqrt(np.dot(pencil.B, r * r))
        Bu = pencil.B * u
        kres[k] = np.linalg.norm(pencil.K @ u - mu[k] * Bu) / (mu[k] * np.linalg.norm(Bu))
        # solve-based partner; equals |x|^{-a} A u at an exact eigenpair but
        # avoids differentiating u twice in the residual meters
        V[:, k] = mu[k] * cascade.solver.solve(cascade.wb * u)
    notes = []
    if grid.kind == "ball":
        notes.append("radial symmetry class only")
    return SpectrumResult(mu, U, V, res, kres, grid, spec, method, notes)


def recover_pair(u, grid: Grid, a: float, op: DiscreteOperator | None = None) -> np.ndarray:
    """Partner ``v = |x|^{-a} (-Δ_h u)``, with the discrete weight ``1/ρ_a``."""
    op = op if op is not None else assemble_laplacian(grid)
    return (op.matrix @ np.asarray(u, dtype=np.float64)) / grid.power_of_radius(a)


@dataclass(frozen=True)
class SystemResiduals:
    first: float
    second: float
    scale: float

    @property
    def worst(self) -> float:
        return max(self.first, self.second)

    def to_dict(self):
        return {"first": self.first, "second": self.second, "scale": self.scale}


def system_residuals(u, v, split: EigenvalueSplit, spec: ProblemSpec, grid: Grid,
                     op: DiscreteOperator | None = None) -> SystemResiduals:
    """Max-norm residuals of the split linear system, relative to field scale.

    With ``ṽ = v / λ1``: ``-Δ_h u - λ1 |x|^a ṽ`` and ``-Δ_h ṽ - λ2 |x|^b u``.
    The scale is the largest of the four terms' max norms.
    """
    op = op if op is not None else assemble_laplacian(grid)
    A = op.matrix
    u = np.asarray(u, dtype=np.float64)
    vt = np.asarray(v, dtype=np.float64) / split.lambda1
    Au = A @ u
    Av = A @ vt
    t1 = split.lambda1 * grid.power_of_radius(spec.a) * vt
    t2 = split.lambda2 * grid.power_of_radius(spec.b) * u
    scale = max(np.max(np.abs(Au), initial=0.0), np.max(np.abs(Av), initial=0.0),
                np.max(np.abs(t1), initial=0.0), np.max(np.abs(t2), initial=0.0))
    if scale == 0.0:
        return SystemResiduals(0.0, 0.0, 0.0)
    r1 = float(np.max(np.abs(Au - t1))) / scale
    r2 = float(np.max(np.abs(Av - t2))) / scale
    return SystemResiduals(r1, r2, float(scale))
