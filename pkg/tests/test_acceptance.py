"""Acceptance criteria 1-11, one PASS/FAIL line each.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

import filecmp
import functools
import itertools
import json
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.special import jn_zeros

from hle_eigen.cli import main as cli_main
from hle_eigen.cli import richardson
from hle_eigen.grid import assemble_laplacian, build_grid
from hle_eigen.linear import assemble_pencil, compute_spectrum, system_residuals
from hle_eigen.nonlinear import inverse_iteration
from hle_eigen.problem import Ball, Interval, ProblemSpec, split_eigenvalue
from hle_eigen.verify import (check_low_dim_inequality, check_positivity, check_symmetry,
                              scaling_slope)

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # pragma: no cover
    ACCEPTANCE_LINES = []


def record(number, passed, measured, tolerance, runtime):
    line = (f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {measured} "
            f"(tolerance: {tolerance}; {runtime:.2f} s)")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def interval_pencil(N, a=0.0, b=0.0):
    spec = ProblemSpec(1, 2.0, a, b, Interval(1.0))
    return assemble_pencil(spec, build_grid(spec.domain, 1, N))


def disc_pencil(N, a=0.0, b=0.0):
    spec = ProblemSpec(2, 2.0, a, b, Ball(1.0))
    return assemble_pencil(spec, build_grid(spec.domain, 2, N))


@functools.lru_cache(maxsize=None)
def interval_spectrum():
    return compute_spectrum(interval_pencil(512), 5)


@functools.lru_cache(maxsize=None)
def disc_spectrum():
    return compute_spectrum(disc_pencil(1024), 2)


CROSS = [(dom, a, b) for dom in ("interval", "ball") for a, b in ((0, 0), (1, 0), (-0.5, -0.5))]


@functools.lru_cache(maxsize=None)
def cross_results():
    """``{case: (linear SpectrumResult, EigenResult)}`` on identical N=512 grids."""
    out = {}
    for dom, a, b in CROSS:
        pen = interval_pencil(512, a, b) if dom == "interval" else disc_pencil(512, a, b)
        lin = compute_spectrum(pen, 1)
        it = inverse_iteration(pen.spec, pen.grid, np.ones(pen.size), op=pen.op)
        out[(dom, a, b)] = (lin, it)
    return out


SYMMETRY = ((1.0, 2.0, 3.0), (0.5, 1.0, 1.5))


@functools.lru_cache(maxsize=None)
def symmetry_pairs():
    """Principal pairs of both sides of the identity at N=512."""
    out = {}
    for a, b, p in SYMMETRY:
        spec = ProblemSpec(2, p, a, b, Ball(1.0))
        g = build_grid(spec.domain, 2, 512)
        for side in (spec, spec.swapped()):
            out[(side.a, side.b, side.p)] = inverse_iteration(side, g)
    return out


def test_criterion_01_navier_oracle():
    t0 = time.perf_counter()
    res = interval_spectrum()
    exact = (np.arange(1, 6) * np.pi / 2) ** 4
    rel = np.abs(res.eigenvalues - exact) / exact
    mus = [compute_spectrum(interval_pencil(N), 1).mu1 for N in (128, 256, 512)]
    order, _ = richardson([128, 256, 512], mus)
    dt = time.perf_counter() - t0
    record(1, bool(np.all(rel < 1e-2) and order >= 1.8 and dt < 10),
           f"max rel err {rel.max():.2e}, order {order:.3f}",
           "rel err < 1e-2, order >= 1.8, < 10 s", dt)


def test_criterion_02_disc_oracle():
    t0 = time.perf_counter()
    res = disc_spectrum()
    target = jn_zeros(0, 1)[0] ** 4
    rel = abs(res.mu1 - target) / target
    dt = time.perf_counter() - t0
    record(2, rel < 1e-2 and dt < 10, f"mu1 {res.mu1:.5f} vs {target:.5f}, rel err {rel:.2e}",
           "rel err < 1e-2, < 10 s", dt)


def test_criterion_03_cross_solver():
    t0 = time.perf_counter()
    worst = max(abs(it.mu - lin.mu1) / lin.mu1 for lin, it in cross_results().values())
    dt = time.perf_counter() - t0
    record(3, worst < 1e-8 and dt < 30, f"worst relative difference {worst:.2e} over {len(CROSS)} cases",
           "< 1e-8 relative, < 30 s", dt)


def test_criterion_04_symmetry():
    t0 = time.perf_counter()
    gaps = {}
    for a, b, p in SYMMETRY:
        for N in (128, 512):
            gaps[(a, b, p, N)] = check_symmetry(a, b, p, Ball(1.0), N=N, n=2).measured["gap"]
    below = all(v < 2e-2 for v in gaps.values())
    # the discrete identity is exact, so the gap sits at round-off on every grid and
    # "shrinking" is read as: no growth beyond a 1e-9 round-off floor
    shrinking = all(gaps[(a, b, p, 512)] <= max(gaps[(a, b, p, 128)], 1e-9) for a, b, p in SYMMETRY)
    dt = time.perf_counter() - t0
    record(4, below and shrinking,
           ", ".join(f"({a},{b},{p}) N={N}: {v:.1e}" for (a, b, p, N), v in gaps.items()),
           "gap < 2e-2 at N=512, non-increasing with N up to round-off", dt)


def test_criterion_05_positivity():
    t0 = time.perf_counter()
    pairs = {"interval a=b=0": (interval_spectrum().vector(0), interval_spectrum().grid),
             "disc a=b=0": (disc_spectrum().vector(0), disc_spectrum().grid)}
    for case, (lin, it) in cross_results().items():
        pairs[f"{case} linear"] = (lin.vector(0), lin.grid)
        pairs[f"{case} iteration"] = (it.u, it.grid)
    for case, it in symmetry_pairs().items():
        pairs[f"symmetry {case}"] = (it.u, it.grid)
    failures = []
    for name, (u, g) in pairs.items():
        rep = check_positivity(u, assemble_laplacian(g))
        if not (rep.passed and rep.measured["strict"]):
            failures.append(name)
    res = interval_spectrum()
    second = check_positivity(res.vector(1), assemble_laplacian(res.grid))
    dt = time.perf_counter() - t0
    record(5, not failures and not second.passed,
           f"{len(pairs) - len(failures)}/{len(pairs)} principal vectors strictly positive and "
           f"superharmonic; k=2 vector {'rejected' if not second.passed else 'ACCEPTED'}",
           "all entries of u and -Δ_h u > 0; k=2 must fail", dt)


def test_criterion_06_simplicity():
    t0 = time.perf_counter()
    ratios = {"interval": interval_spectrum().gap / interval_spectrum().mu1,
              "disc": disc_spectrum().gap / disc_spectrum().mu1}
    dt = time.perf_counter() - t0
    record(6, all(r > 1e-3 for r in ratios.values()),
           ", ".join(f"{k}: gap/mu1 {v:.3f}" for k, v in ratios.items()), "gap > 1e-3 mu1", dt)


def test_criterion_07_scaling_collapse():
    t0 = time.perf_counter()
    r1 = scaling_slope(0.0, -4.5, 2.0, 4096, [1, 2, 4, 8], n=1)
    r2 = scaling_slope(1.0, -5.5, 2.0, 1024, [1, 2, 4, 8], n=2)
    dt = time.perf_counter() - t0
    record(7, r1.passed and r2.passed,
           f"n=1 slope {r1.measured['slope']:.4f} (R2 {r1.measured['r2']:.5f}), "
           f"n=2 slope {r2.measured['slope']:.4f} (R2 {r2.measured['r2']:.5f}); expected -0.5",
           "|slope - (s+2p+b)| <= 0.05, R2 >= 0.99", dt)


def test_criterion_08_low_dim_inequality():
    t0 = time.perf_counter()
    reps = [check_low_dim_inequality(n, a, p, sample_count=100, N=512, seed=0)
            for n, p, a in ((1, 2.0, 0.0), (2, 1.5, 1.0), (1, 3.0, -0.5))]
    dt = time.perf_counter() - t0
    record(8, all(r.passed and r.margin >= 0 for r in reps),
           "worst margins " + ", ".join(f"{r.margin:.3e}" for r in reps),
           "both inequalities, margin >= 0 on 100 samples each", dt)


def test_criterion_09_splitting():
    t0 = time.perf_counter()
    results = [interval_spectrum(), disc_spectrum()] + [lin for lin, _ in cross_results().values()]
    worst = 0.0
    count = 0
    for res in results:
        u, v = res.vector(0), res.partners[:, 0]
        for ratio in (0.5, 1.0, 2.0):
            sr = system_residuals(u, v, split_eigenvalue(res.mu1, 2.0, ratio), res.spec, res.grid)
            worst = max(worst, sr.worst)
            count += 1
    dt = time.perf_counter() - t0
    record(9, worst <= 1e-6 and count >= 6, f"worst relative residual {worst:.2e} over {count} splits",
           "<= 1e-6 scale", dt)


def test_criterion_10_admissibility_gate(tmp_path):
    t0 = time.perf_counter()
    rejected = []
    for n, dom in ((2, {"variant": "ball", "R": 1}), (3, {"variant": "ball", "R": 1})):
        cfg = tmp_path / f"bad{n}.json"
        cfg.write_text(json.dumps({"n": n, "p": 2, "a": -2, "b": -3, "N": 32, "domain": dom}))
        rejected.append(cli_main(["solve", "--config", str(cfg), "--out", str(tmp_path / "x")]))
    accepted = 0
    implied = 0
    total = 0
    for n, p, fa, fb in itertools.product((1, 2), (1.5, 2.0, 3.0), (-0.9, 0.0, 1.5), (-0.9, 0.5)):
        a, b = fa * n, fb * n
        dom = {"variant": "interval", "R": 1} if n == 1 else {"variant": "ball", "R": 1}
        cfg = tmp_path / "ok.json"
        cfg.write_text(json.dumps({"n": n, "p": p, "a": a, "b": b, "N": 32, "domain": dom}))
        out = tmp_path / f"ok{total}"
        total += 1
        if cli_main(["solve", "--config", str(cfg), "--out", str(out)]) == 0:
            accepted += 1
            rec = json.loads((out / "result.json").read_text())
            conds = {c["name"]: c for c in rec["admissibility"]["conditions"]}
            implied += "implied" in conds["a/p'+b/p+2>0"]["note"]
    dt = time.perf_counter() - t0
    record(10, rejected == [2, 2] and accepted == total == implied,
           f"(-2,-3,2) exit codes {rejected}; accepted {accepted}/{total} low-dimensional specs, "
           f"{implied} flagged implied", "exit 2 on rejection; all a,b > -n accepted", dt)


def _run_all(out: Path, cfgdir: Path):
    solve2 = cfgdir / "s2.json"
    solve2.write_text(json.dumps({"n": 2, "p": 2, "a": 1, "b": 0, "N": 256, "K": 3,
                                  "domain": {"variant": "ball", "R": 1}, "ratios": [0.5, 1, 2]}))
    solve3 = cfgdir / "s3.json"
    solve3.write_text(json.dumps({"n": 2, "p": 3, "a": 1, "b": 2, "N": 128,
                                  "domain": {"variant": "ball", "R": 1}}))
    suite = cfgdir / "v.json"
    suite.write_text(json.dumps({"seed": 7, "checks": [
        {"check": "low_dim", "n": 2, "p": 1.5, "a": 1, "samples": 20, "N": 256},
        {"check": "symmetry", "a": 0.5, "b": 1, "p": 1.5, "n": 2, "N": 128}]}))
    sweep = cfgdir / "w.json"
    sweep.write_text(json.dumps({"n": 1, "p": 2, "a": 0, "b": 0, "N": 128,
                                 "sweep": {"axes": {"b": [-1.5, -0.5, 0.5], "p": [1.5, 2.5]}}}))
    codes = [
        cli_main(["solve", "--config", str(solve2), "--out", str(out / "s2"), "--seed", "11"]),
        cli_main(["solve", "--config", str(solve3), "--out", str(out / "s3"), "--seed", "11"]),
        cli_main(["verify", "--config", str(suite), "--out", str(out / "v")]),
        cli_main(["sweep", "--config", str(sweep), "--out", str(out / "w"), "--workers", "2"]),
    ]
    return codes


def test_criterion_11_determinism(tmp_path):
    t0 = time.perf_counter()
    c1 = _run_all(tmp_path / "run1", tmp_path)
    c2 = _run_all(tmp_path / "run2", tmp_path)
    files = sorted(p.relative_to(tmp_path / "run1") for p in (tmp_path / "run1").rglob("*") if p.is_file())
    same = [filecmp.cmp(tmp_path / "run1" / f, tmp_path / "run2" / f, shallow=False) for f in files]
    dt = time.perf_counter() - t0
    record(11, c1 == c2 == [0, 0, 0, 0] and len(files) >= 10 and all(same),
           f"{sum(same)}/{len(files)} output files bit-identical across two runs",
           "bit-identical outputs", dt)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
