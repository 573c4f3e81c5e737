"""Principal eigenvalue for general p by 1-homogeneous inverse iteration.

One step maps ``u`` to ``T(u)``, the ``u``-component of the cascade with
right-hand side ``u``, and renormalizes. ``T`` is 1-homogeneous, so at a
fixed point ``T(u) = μ^{-(p'-1)} u`` and the eigenvalue is read off the
pre-normalization size as ``||T(u)||^{-(p-1)}``. The Rayleigh quotient
of the iterate is tracked alongside as an independent meter.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import DiscreteOperator, Grid, assemble_laplacian, weight_vector
from .linear import ConvergenceError, sign_normalize
from .poisson import Cascade
from .problem import ProblemSpec, validate

__all__ = [
    "IterationTrace",
    "EigenResult",
    "quotient",
    "spec_weights",
    "rayleigh_quotient",
    "normalize",
    "inverse_iteration",
    "multi_start",
    "principal_pair",
    "ConvergenceError",
]

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 500


def _quotient(op, u, wnum, wden, p):
    u = np.ascontiguousarray(u, dtype=np.float64)
    den = kernels.weighted_power_sum(u, wden, p)
    if den == 0.0:
        raise ZeroDivisionError("quotient of the zero function")
    lap = np.ascontiguousarray(op.matrix @ u)
    return kernels.weighted_power_sum(lap, wnum, p) / den


def quotient(grid: Grid, op: DiscreteOperator, u, s: float, b: float, p: float) -> float:
    """``sum w |x|^{-s} |Δ_h u|^p / sum w |x|^b |u|^p`` for free exponents ``s``, ``b``."""
    return _quotient(op, u, np.ascontiguousarray(weight_vector(grid, -s)),
                     np.ascontiguousarray(weight_vector(grid, b)), p)


def spec_weights(spec: ProblemSpec, grid: Grid):
    """Numerator and denominator weights of the quotient of ``spec``.

    The numerator uses ``ρ_a^{1-p}`` rather than an independent average of
    ``|x|^{-s}``, so that the quotient equals the cascade eigenvalue at a
    fixed point.
    """
    wnum = grid.weights * grid.power_of_radius(spec.a) ** (1.0 - spec.p)
    wden = weight_vector(grid, spec.b)
    return np.ascontiguousarray(wnum), np.ascontiguousarray(wden)


def rayleigh_quotient(u, spec: ProblemSpec, grid: Grid, op: DiscreteOperator | None = None) -> float:
    op = op if op is not None else assemble_laplacian(grid)
    return _quotient(op, u, *spec_weights(spec, grid), spec.p)


def _bnorm(u, wb, p):
    return kernels.weighted_power_sum(u, wb, p) ** (1.0 / p)


def normalize(u, spec: ProblemSpec, grid: Grid):
    """Scale ``u`` to unit ``|x|^b``-weighted p-norm, largest entry positive."""
    u = np.asarray(u, dtype=np.float64)
    nrm = _bnorm(np.ascontiguousarray(u), np.ascontiguousarray(weight_vector(grid, spec.b)), spec.p)
    if nrm == 0.0:
        raise ZeroDivisionError("cannot normalize the zero function")
    return sign_normalize(u / nrm)


@dataclass
class IterationTrace:
    quotient: list = field(default_factory=list)
    mu_hat: list = field(default_factory=list)
    increment: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.quotient)

    @property
    def quotient_monotone(self) -> bool:
        q = np.asarray(self.quotient)
        return bool(np.all(np.diff(q) <= 1e-12 * np.abs(q[1:]))) if q.size > 1 else True

    def rows(self):
        for k, (q, m, d) in enumerate(zip(self.quotient, self.mu_hat, self.increment), 1):
            yield k, q, m, d

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["iteration", "Q", "mu_hat", "increment"])
            for k, q, m, d in self.rows():
                wr.writerow([k, repr(q), repr(m), repr(d)])


@dataclass(eq=False)
class EigenResult:
    mu: float
    u: np.ndarray
    v: np.ndarray
    trace: IterationTrace
    spec: ProblemSpec
    grid: Grid

    def to_dict(self):
        return {
            "mu": self.mu,
            "iterations": self.trace.iterations,
            "converged": self.trace.converged,
            "final_increment": self.trace.increment[-1] if self.trace.increment else None,
            "quotient_monotone": self.trace.quotient_monotone,
            "grid": self.grid.metadata(),
        }


def _auto_start(spec: ProblemSpec, grid: Grid, op: DiscreteOperator):
    """Principal p = 2 eigenvector for the same weights, else all ones."""
    lin = ProblemSpec(spec.n, 2.0, spec.a, spec.b, spec.domain)
    ones = np.ones(grid.size)
    if not validate(lin).admissible:
        return ones
    cascade = Cascade(lin, grid, op)
    wb = np.ascontiguousarray(weight_vector(grid, spec.b))
    u = ones
    for _ in range(200):
        t, _ = cascade(u)
        t /= _bnorm(t, wb, 2.0)
        if _bnorm(t - u, wb, 2.0) < 1e-12:
            u = t
            break
        u = t
    if not np.all(u > 0):
        return ones
    return u


def inverse_iteration(spec: ProblemSpec, grid: Grid, u0="auto", tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER, *, override_threshold: bool = False,
                      op: DiscreteOperator | None = None) -> EigenResult:
    """Principal eigenpair ``(μ, u, v)`` by normalized cascade iteration.

    Stops once the weighted increment is below ``tol`` and the quotient
    and homogeneity estimates agree to ``tol`` relative. Raises
    :class:`ConvergenceError` (carrying the trace) after ``max_iter`` steps.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    report = validate(spec)
    if not report.admissible:
        blocking = [c for c in report.failures
                    if not (override_threshold and c.name in ("s+b+2p>0", "a/p'+b/p+2>0", "a+b+4>0"))]
        if blocking or spec.s + spec.b + 2 * spec.p < -1e-12:
            raise ValueError(report.message())

    op = op if op is not None else assemble_laplacian(grid)
    cascade = Cascade(spec, grid, op)
    p = spec.p
    wnum, wb = spec_weights(spec, grid)

    if isinstance(u0, str):
        if u0 != "auto":
            raise ValueError(f"unknown initial guess {u0!r}")
        u0 = _auto_start(spec, grid, op)
    u = normalize(u0, spec, grid)

    trace = IterationTrace()
    for it in range(max_iter):
        tu, _ = cascade(u)
        size = _bnorm(tu, wb, p)
        mu_hat = size ** (-(p - 1.0))
        nxt = sign_normalize(tu / size)
        inc = _bnorm(nxt - u, wb, p)
        q = _quotient(op, nxt, wnum, wb, p)
        trace.quotient.append(q)
        trace.mu_hat.append(mu_hat)
        trace.increment.append(inc)
        u = nxt
        if inc < tol and abs(q - mu_hat) < tol * mu_hat:
            trace.converged = True
            break
    if not trace.converged:
        raise ConvergenceError(
            f"inverse iteration did not converge in {max_iter} steps "
            f"(last increment {trace.increment[-1]:.3e})", trace)
    if not trace.quotient_monotone:
        log.info("Rayleigh quotient was not monotone along the iteration")

    mu = trace.quotient[-1]
    _, vt = cascade(u)
    return EigenResult(mu=mu, u=u, v=mu * vt, trace=trace, spec=spec, grid=grid)


def multi_start(spec: ProblemSpec, grid: Grid, starts: int = 8, seed: int = 0,
                tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    """Run the iteration from random positive starts; return the μ values."""
    rng = np.random.default_rng(seed)
    op = assemble_laplacian(grid)
    mus = []
    for _ in range(starts):
        u0 = rng.uniform(0.1, 1.0, grid.size)
        mus.append(inverse_iteration(spec, grid, u0, tol, max_iter, op=op).mu)
    mus = np.array(mus)
    return {"mu": mus.tolist(), "spread": float((mus.max() - mus.min()) / mus.min())}


def principal_pair(spec: ProblemSpec, grid: Grid, *, op: DiscreteOperator | None = None,
                   override_threshold: bool = False, tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER):
    """``(μ, u, v)`` from the pencil when ``p = 2``, inverse iteration otherwise.

    ``u`` has unit weighted norm and ``(u, v)`` solves
    ``-Δ_h u = |x|^a |v|^{p'-2} v``, ``-Δ_h v = μ |x|^b |u|^{p-2} u``.
    """
    from .linear import assemble_pencil, compute_spectrum

    op = op if op is not None else assemble_laplacian(grid)
    if spec.p == 2.0:
        pencil = assemble_pencil(spec, grid, override_threshold=override_threshold, op=op)
        res = compute_spectrum(pencil, 1)
        return res.mu1, res.vector(0), res.partners[:, 0]
    out = inverse_iteration(spec, grid, "auto", tol, max_iter,
                            override_threshold=override_threshold, op=op)
    return out.mu, out.u, out.v
