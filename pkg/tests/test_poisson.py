import threading

import numpy as np
import pytest
import scipy.sparse as sp

from hle_eigen.grid import DiscreteOperator, assemble_laplacian, build_grid
from hle_eigen.poisson import (Cascade, OperatorError, PoissonSolver, cascade_solve,
                               solve_poisson)
from hle_eigen.problem import Ball, Interval, ProblemSpec, Rectangle


def test_zero_rhs():
    g = build_grid(Interval(1.0), 1, 32)
    sol = solve_poisson(assemble_laplacian(g), np.zeros(g.size))
    assert not np.any(sol.u) and sol.residual_inf == 0.0


@pytest.mark.parametrize("N", [32, 128, 512])
def test_interval_quadratic(N):
    g = build_grid(Interval(1.0), 1, N)
    h = g.h[0]
    sol = solve_poisson(assemble_laplacian(g), np.full(g.size, 2.0))
    # the half-cell Dirichlet closure shifts the discrete solution by h^2/4
    assert np.max(np.abs(sol.u - (1 - g.nodes**2 + h * h / 4))) < 1e-10
    assert np.max(np.abs(sol.u - (1 - g.nodes**2))) <= h * h
    assert sol.residual_inf <= 1e-10 * 2.0


@pytest.mark.parametrize("n", [2, 3, 5])
def test_ball_quadratic(n):
    g = build_grid(Ball(1.0), n, 128)
    h = g.h[0]
    sol = solve_poisson(assemble_laplacian(g), np.full(g.size, 2.0 * n))
    assert np.max(np.abs(sol.u - (1 - g.nodes**2 + h * h / 4))) < 1e-10
    assert sol.residual_inf <= 1e-10 * 2 * n


def test_backward_error_fine_grid():
    g = build_grid(Interval(1.0), 1, 4096)
    sol = solve_poisson(assemble_laplacian(g), np.full(g.size, 2.0))
    assert sol.backward_error < 1e-14


def test_rectangle_uses_sparse_lu():
    g = build_grid(Rectangle(1.0, 1.0), 2, 16)
    op = assemble_laplacian(g)
    f = np.ones(g.size)
    sol = solve_poisson(op, f)
    assert sol.residual_inf < 1e-10 and np.all(sol.u > 0)
    F = np.column_stack([f, 2 * f])
    U = PoissonSolver(op).solve_many(F)
    assert np.allclose(U[:, 1], 2 * sol.u)


def test_singular_operator():
    mat = sp.csr_matrix(np.array([[1.0, -1.0], [-1.0, 1.0]]))
    op = DiscreteOperator(mat, "singular", True, None)
    with pytest.raises(OperatorError):
        solve_poisson(op, np.ones(2))
    bad = DiscreteOperator(sp.csr_matrix(-np.eye(2)), "negative", True, None)
    with pytest.raises(OperatorError):
        PoissonSolver(bad)


def test_concurrent_solves():
    g = build_grid(Ball(1.0), 3, 256)
    solver = PoissonSolver(assemble_laplacian(g))
    rng = np.random.default_rng(0)
    rhs = [rng.standard_normal(g.size) for _ in range(8)]
    ref = [solver.solve(f) for f in rhs]
    out = [None] * 8

    def work(i):
        out[i] = solver.solve(rhs[i])

    ts = [threading.Thread(target=work, args=(i,)) for i in range(8)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert all(np.array_equal(a, b) for a, b in zip(ref, out))


def test_cascade_zero_and_sign():
    spec = ProblemSpec(2, 1.5, 0.5, -0.5, Ball(1.0))
    g = build_grid(spec.domain, 2, 64)
    pair = cascade_solve(spec, g, np.zeros(g.size))
    assert not np.any(pair.u) and not np.any(pair.v)
    f = np.zeros(g.size)
    f[10:20] = 1.0
    pair = cascade_solve(spec, g, f)
    assert np.all(pair.u > 0) and np.all(pair.v > 0)
    assert pair.residual_u < 1e-10 and pair.residual_v < 1e-10


def test_cascade_eigenfunction():
    spec = ProblemSpec(1, 2.0, 0.0, 0.0, Interval(1.0))
    g = build_grid(spec.domain, 1, 512)
    phi = np.cos(np.pi * g.nodes / 2)
    pair = cascade_solve(spec, g, phi)
    lam = (np.pi / 2) ** 2
    assert np.allclose(pair.v, phi / lam, atol=1e-5)
    assert np.allclose(pair.u, phi / lam**2, atol=1e-5)


def test_cascade_linearity():
    spec = ProblemSpec(1, 2.0, 0.0, 0.0, Interval(1.0))
    g = build_grid(spec.domain, 1, 128)
    f = np.random.default_rng(1).standard_normal(g.size)
    c = Cascade(spec, g)
    u1, v1 = c(f)
    u2, v2 = c(-3.7 * f)
    assert np.allclose(u2, -3.7 * u1, rtol=1e-12, atol=0)
    assert np.allclose(v2, -3.7 * v1, rtol=1e-12, atol=0)


@pytest.mark.parametrize("p", [1.3, 2.5, 4.0])
def test_cascade_homogeneity(p):
    spec = ProblemSpec(2, p, 0.5, 0.3, Ball(1.0))
    g = build_grid(spec.domain, 2, 128)
    f = np.abs(np.random.default_rng(2).standard_normal(g.size)) + 0.1
    c = Cascade(spec, g)
    u1, v1 = c(f)
    alpha = 2.3
    u2, v2 = c(alpha * f)
    assert np.max(np.abs(v2 - alpha ** (p - 1) * v1)) <= 1e-10 * np.max(np.abs(v2))
    assert np.max(np.abs(u2 - alpha * u1)) <= 1e-10 * np.max(np.abs(u2))


def test_inadmissible_cascade():
    spec = ProblemSpec(3, 2.0, -2.0, -3.0, Ball(1.0))
    g = build_grid(spec.domain, 3, 16)
    with pytest.raises(ValueError):
        cascade_solve(spec, g, np.ones(g.size))
