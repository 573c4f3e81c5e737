"""Numerical certificates for the structural properties of the problem.

Each check returns a :class:`PropertyReport` carrying its parameters, the
measured quantities, a pass flag and a signed margin (positive = pass).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import (DiscreteOperator, Grid, GridError, assemble_laplacian, build_grid,
                   gradient_squared, weight_vector, weighted_norm)
from .nonlinear import principal_pair, quotient
from .poisson import PoissonSolver
from .problem import Ball, Interval, ProblemSpec, conjugate

__all__ = [
    "PropertyReport",
    "low_dim_constant",
    "bump",
    "check_symmetry",
    "check_positivity",
    "scaling_slope",
    "random_test_functions",
    "check_low_dim_inequality",
    "estimate_rellich_constant",
    "check_equivalence",
    "finite_energy_norms",
    "finite_energy_report",
]


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if hasattr(x, "to_dict"):
        return x.to_dict()
    return x


@dataclass
class PropertyReport:
    name: str
    parameters: dict
    measured: dict
    passed: bool
    margin: float
    tolerance: float | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: margin={self.margin:.4g}"


def _domain_for(n: int, R: float = 1.0):
    return Interval(R) if n == 1 else Ball(R)


# ---------------------------------------------------------------- symmetry

def check_symmetry(a: float, b: float, p: float, domain=None, N: int = 512, n: int = 2,
                   tol: float = 2e-2) -> PropertyReport:
    """Relative gap ``|μ(b,a,p')^p - μ(a,b,p)^{p'}| / μ(a,b,p)^{p'}``."""
    domain = domain if domain is not None else Ball(1.0)
    if isinstance(domain, Interval):
        n = 1
    grid = build_grid(domain, n, N)
    op = assemble_laplacian(grid)
    spec = ProblemSpec(n, p, a, b, domain)
    dual = spec.swapped()
    mu, _, _ = principal_pair(spec, grid, op=op)
    mu_dual, _, _ = principal_pair(dual, grid, op=op)
    pc = conjugate(p)
    target = mu**pc
    gap = abs(mu_dual**p - target) / target
    return PropertyReport(
        "symmetry",
        {"a": a, "b": b, "p": p, "N": N, "n": n, "domain": domain.to_dict()},
        {"mu": mu, "mu_dual": mu_dual, "lhs": mu_dual**p, "rhs": target, "gap": gap},
        gap < tol, tol - gap, tol)


# -------------------------------------------------------------- positivity

def check_positivity(u, op: DiscreteOperator) -> PropertyReport:
    """``u > 0`` entrywise and ``-Δ_h u`` superharmonic: ``>= 0`` and not identically 0.

    Entries of ``-Δ_h u`` within rounding of zero count as zero. Whether
    ``-Δ_h u`` is strictly positive everywhere is recorded as ``strict``.
    """
    u = np.asarray(u, dtype=np.float64)
    lap = op.matrix @ u
    umin = float(u.min())
    lmin = float(lap.min())
    scale_u = float(np.max(np.abs(u))) or 1.0
    scale_l = float(np.max(np.abs(lap))) or 1.0
    floor = 1e-12 * scale_l
    passed = umin > 0 and lmin >= -floor and float(lap.max()) > floor
    margin = min(umin / scale_u, (lmin + floor) / scale_l)
    return PropertyReport(
        "positivity", {"size": int(u.size)},
        {"min_u": umin, "min_minus_laplacian": lmin, "strict": bool(umin > 0 and lmin > floor)},
        bool(passed), margin)


# ----------------------------------------------------------------- scaling

def bump(r, center: float = 0.5, half_width: float = 0.25):
    """Smooth bump of ``|x|`` supported in ``center ± half_width``."""
    t = (np.asarray(r, dtype=np.float64) - center) / half_width
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return out


def scaling_slope(s: float, b: float, p: float, N: int, k_list, n: int = 1,
                  tol: float = 0.05, min_r2: float = 0.99) -> PropertyReport:
    """Fit ``log Q(ψ_k)`` against ``log k`` for dilations ``ψ_k(x) = ψ(kx)``.

    Expected slope ``s + 2p + b``. In the collapse regime the report passes
    when the fitted slope is within ``tol`` and R² ≥ ``min_r2``; in the
    admissible regime it passes when the slope is positive.
    """
    k_list = sorted(set(float(k) for k in k_list))
    if len(k_list) < 2:
        raise ValueError("need at least two dilation factors")
    grid = build_grid(_domain_for(n), n, N)
    op = assemble_laplacian(grid)
    width = 0.5 / max(k_list)  # support of ψ_k in |x|
    if width / grid.h[0] < 8:
        raise GridError(f"support of ψ_k spans {width / grid.h[0]:.1f} cells; need >= 8")
    qs = [quotient(grid, op, bump(k * grid.radius), s, b, p) for k in k_list]
    lk, lq = np.log(k_list), np.log(qs)
    slope, icpt = np.polyfit(lk, lq, 1)
    fit = slope * lk + icpt
    ss_res = float(np.sum((lq - fit) ** 2))
    ss_tot = float(np.sum((lq - lq.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    expected = s + 2 * p + b
    if expected < 0:
        err = abs(slope - expected)
        passed = err <= tol and r2 >= min_r2
        margin = min(tol - err, r2 - min_r2)
    else:
        passed = slope > 0
        margin = float(slope)
    return PropertyReport(
        "scaling_slope",
        {"s": s, "b": b, "p": p, "N": N, "n": n, "k": k_list},
        {"Q": qs, "slope": float(slope), "expected": expected, "r2": r2,
         "regime": "collapse" if expected < 0 else "admissible"},
        bool(passed), float(margin), tol)


# ------------------------------------------------------- low-dimensional inequality

def low_dim_constant(n: int, a: float, p: float) -> float:
    """Explicit constant ``[(p-1) ((a+n)/p)^2]^p`` of the low-dimensional bound."""
    return ((p - 1.0) * ((a + n) / p) ** 2) ** p


def random_test_functions(grid: Grid, count: int, seed: int = 0, modes: int = 6,
                          hole: float = 0.2, op: DiscreteOperator | None = None):
    """Dirichlet functions whose discrete Laplacian vanishes for ``|x| < hole``.

    Each is the Poisson solution for a random smooth right-hand side cut
    off near the origin.
    """
    op = op if op is not None else assemble_laplacian(grid)
    solver = PoissonSolver(op)
    rng = np.random.default_rng(seed)
    r = grid.radius
    R = float(np.max(r)) + grid.h[0] / 2
    cut = np.where(r > hole, 1.0 - np.exp(-((r - hole) / (0.1 * R)) ** 2), 0.0)
    out = []
    for _ in range(count):
        c = rng.standard_normal(modes)
        ph = rng.uniform(0, 2 * np.pi, modes)
        if grid.kind == "rectangle":
            x, y = grid.nodes[:, 0], grid.nodes[:, 1]
            th = rng.uniform(0, np.pi, modes)
            g = sum(c[j] * np.cos((j + 1) * np.pi * (np.cos(th[j]) * x + np.sin(th[j]) * y) / R + ph[j])
                    for j in range(modes))
        elif grid.kind == "interval":
            x = grid.nodes
            g = sum(c[j] * np.cos((j + 1) * np.pi * x / R + ph[j]) for j in range(modes))
        else:
            g = sum(c[j] * np.cos((j + 1) * np.pi * r / R + ph[j]) for j in range(modes))
        out.append(solver.solve(cut * g))
    return out


def check_low_dim_inequality(n: int, a: float, p: float, sample_count: int = 100,
                              grid: Grid | None = None, N: int = 512,
                              seed: int = 0) -> PropertyReport:
    """Both low-dimensional inequalities over seeded random test functions.

    Main bound: ``c sum w|x|^a|u|^p <= sum w|x|^{-a(p-1)}|Δ_h u|^p`` with
    ``c`` from :func:`low_dim_constant`. Intermediate bound:
    ``(p-1) sum w|∇_h u|^2|u|^{p-2} <= sum w|Δ_h u||u|^{p-1}``, where the
    left integrand is evaluated as ``(2/p)^2 |∇_h |u|^{p/2}|^2`` with
    centered differences.
    Margins are relative to the right-hand sides.
    """
    if n not in (1, 2):
        raise ValueError("the low-dimensional inequality is stated for n = 1, 2")
    s = a * (p - 1.0)
    if not s > n - n * p:
        raise ValueError(f"need a(p-1) > n - np, got s = {s}")
    grid = grid if grid is not None else build_grid(_domain_for(n), n, N)
    op = assemble_laplacian(grid)
    c = low_dim_constant(n, a, p)
    wa = weight_vector(grid, a)
    ws = weight_vector(grid, -s)
    w0 = grid.weights
    main, inter = [], []
    for u in random_test_functions(grid, sample_count, seed, op=op):
        lap = op.matrix @ u
        au = np.abs(u)
        lhs = c * float(np.dot(wa, au**p))
        rhs = float(np.dot(ws, np.abs(lap) ** p))
        main.append((rhs - lhs) / rhs if rhs > 0 else 0.0)
        # |∇u|^2 |u|^{p-2} = (2/p)^2 |∇|u|^{p/2}|^2; sampling |u|^{p-2} at
        # nodes next to a zero of u is unstable for p < 2
        g2 = gradient_squared(grid, au ** (p / 2.0))
        lhs2 = (p - 1.0) * (2.0 / p) ** 2 * float(np.dot(w0, g2))
        rhs2 = float(np.dot(w0, np.abs(lap) * au ** (p - 1.0)))
        inter.append((rhs2 - lhs2) / rhs2 if rhs2 > 0 else 0.0)
    worst_main = min(main) if main else 0.0
    worst_inter = min(inter) if inter else 0.0
    margin = min(worst_main, worst_inter)
    return PropertyReport(
        "low_dim_inequality",
        {"n": n, "a": a, "p": p, "samples": sample_count, "seed": seed, "N": grid.N,
         "grid": grid.kind},
        {"constant": c, "worst_margin_main": worst_main, "worst_margin_intermediate": worst_inter},
        margin >= 0, margin)


# --------------------------------------------------------- Rellich estimate

def estimate_rellich_constant(s: float, p: float, n: int, N: int = 256,
                              N_fine: int | None = None, floor: float = 1e-4,
                              oracle: float | None = None) -> PropertyReport:
    """Minimize ``sum w|x|^{-s}|Δ_h u|^p / sum w|x|^{-s-2p}|u|^p`` on the ball.

    Runs on the threshold ``s + b + 2p = 0`` itself, bypassing the
    spectrum guard. Passes when both refinement levels exceed ``floor``,
    their ratio lies in [0.5, 2] and, if given, both exceed
    ``0.9 * oracle``.
    """
    if not s < n - 2 * p:
        raise ValueError(f"need s < n - 2p = {n - 2 * p}, got s = {s}")
    if not s > n - n * p:
        raise ValueError(f"need s > n - np = {n - n * p}, got s = {s}")
    N_fine = N_fine or 2 * N
    a = s / (p - 1.0)
    b = -s - 2 * p
    dom = Ball(1.0)
    spec = ProblemSpec(n, p, a, b, dom)
    est = []
    for M in (N, N_fine):
        grid = build_grid(dom, n, M)
        mu, _, _ = principal_pair(spec, grid, override_threshold=True)
        est.append(mu)
    ratio = est[0] / est[1]
    passed = min(est) > floor and 0.5 <= ratio <= 2.0
    margin = min(min(est) - floor, ratio - 0.5, 2.0 - ratio)
    measured = {"coarse": est[0], "fine": est[1], "ratio": ratio}
    if oracle is not None:
        measured["oracle"] = oracle
        passed = passed and min(est) >= 0.9 * oracle
        margin = min(margin, min(est) / (0.9 * oracle) - 1.0)
    return PropertyReport(
        "rellich_constant",
        {"s": s, "p": p, "n": n, "a": a, "b": b, "N": N, "N_fine": N_fine},
        measured, bool(passed), float(margin), floor)


# ------------------------------------------------------------- equivalence

def _phi(x, q):
    return np.sign(x) * np.abs(x) ** (q - 1.0)


def check_equivalence(spec: ProblemSpec, grid: Grid, tol: float = 1e-8, pair=None,
                      op: DiscreteOperator | None = None) -> PropertyReport:
    """Fourth-order weak form and the second-order system on the same data.

    ``pair`` is ``(μ, u)``; it is computed when omitted.
    """
    op = op if op is not None else assemble_laplacian(grid)
    A = op.matrix
    if pair is None:
        mu, u, _ = principal_pair(spec, grid, op=op)
    else:
        mu, u = pair[0], np.asarray(pair[1], dtype=np.float64)
    p = spec.p
    lap = A @ u
    flux = grid.power_of_radius(spec.a) ** (1.0 - p) * _phi(lap, p)
    # weak form, tested against every nodal basis vector (W A is symmetric)
    t1 = grid.weights * (A @ flux)
    t2 = mu * weight_vector(grid, spec.b) * _phi(u, p)
    sc1 = max(np.max(np.abs(t1), initial=0.0), np.max(np.abs(t2), initial=0.0))
    r_weak = float(np.max(np.abs(t1 - t2))) / sc1 if sc1 else 0.0
    v = flux
    s1 = grid.power_of_radius(spec.a) * _phi(v, spec.p_conj)
    s2 = mu * grid.power_of_radius(spec.b) * _phi(u, p)
    Av = A @ v
    sc2 = max(np.max(np.abs(lap), initial=0.0), np.max(np.abs(s1), initial=0.0),
              np.max(np.abs(Av), initial=0.0), np.max(np.abs(s2), initial=0.0))
    r_sys = (max(float(np.max(np.abs(lap - s1))), float(np.max(np.abs(Av - s2)))) / sc2
             if sc2 else 0.0)
    worst = max(r_weak, r_sys)
    return PropertyReport(
        "equivalence", {**spec.to_dict(), "N": grid.N},
        {"mu": float(mu), "weak_form_residual": r_weak, "system_residual": r_sys},
        worst <= tol, tol - worst, tol)


# ------------------------------------------------------------ finite energy

def finite_energy_norms(u, v, spec: ProblemSpec, grid: Grid,
                        op: DiscreteOperator | None = None) -> dict:
    op = op if op is not None else assemble_laplacian(grid)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return {
        "u_b_p": weighted_norm(grid, spec.b, u, spec.p),
        "v_a_pconj": weighted_norm(grid, spec.a, v, spec.p_conj),
        "lap_u_l1": float(np.dot(grid.weights, np.abs(op.matrix @ u))),
        "lap_v_l1": float(np.dot(grid.weights, np.abs(op.matrix @ v))),
    }


def finite_energy_report(spec: ProblemSpec, N: int = 256, N_fine: int | None = None,
                         band: tuple = (0.8, 1.25), zero: bool = False) -> PropertyReport:
    """Compare the four finite-energy norms of the principal pair at two grids.

    ``zero=True`` evaluates the zero pair instead (all norms vanish).
    """
    N_fine = N_fine or 2 * N
    norms = []
    for M in (N, N_fine):
        grid = build_grid(spec.domain, spec.n, M)
        op = assemble_laplacian(grid)
        if zero:
            u = v = np.zeros(grid.size)
        else:
            _, u, v = principal_pair(spec, grid, op=op)
        norms.append(finite_energy_norms(u, v, spec, grid, op))
    ratios = {}
    margin = math.inf
    for key in norms[0]:
        c, f = norms[0][key], norms[1][key]
        r = 1.0 if c == f == 0.0 else (c / f if f else math.inf)
        ratios[key] = r
        margin = min(margin, r - band[0], band[1] - r)
    return PropertyReport(
        "finite_energy", {**spec.to_dict(), "N": N, "N_fine": N_fine},
        {"coarse": norms[0], "fine": norms[1], "ratios": ratios},
        margin >= 0, float(margin), None)
