"""Command-line front end: ``hle-eigen {solve,verify,sweep,converge,dump-grid}``.

Exit codes: 0 success, 1 configuration error, 2 inadmissible parameters,
3 solver failure, 4 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .config import ConfigError, RunConfig, config_hash, load_config
from .grid import GridError, assemble_laplacian, build_grid
from .linear import (ConvergenceError, ThresholdError, assemble_pencil, compute_spectrum,
                     system_residuals)
from .nonlinear import inverse_iteration, principal_pair
from .poisson import OperatorError
from .problem import Ball, Interval, ProblemSpec, domain_from_dict, split_eigenvalue, validate
from . import verify as V

__all__ = ["main", "run_solve", "run_verify", "run_sweep", "run_convergence", "run_dump_grid",
           "default_suite", "Inadmissible", "CheckFailed"]

log = logging.getLogger("hle_eigen")

EXIT_CONFIG, EXIT_INADMISSIBLE, EXIT_SOLVER, EXIT_CHECK = 1, 2, 3, 4

EIGEN_COLUMNS = ["config_hash", "variant", "n", "N", "k", "mu", "residual"]
SPLIT_COLUMNS = ["config_hash", "N", "ratio", "lambda1", "lambda2", "residual_first", "residual_second"]
SWEEP_COLUMNS = ["config_hash", "index", "n", "p", "a", "b", "N", "margin_dimension", "margin_threshold",
                 "status", "mu1", "reason"]
CONVERGENCE_COLUMNS = ["config_hash", "N", "h", "mu1"]
SUMMARY_COLUMNS = ["config_hash", "index", "check", "passed", "margin"]


class Inadmissible(Exception):
    """Parameters violate the admissibility conditions."""


class CheckFailed(Exception):
    """At least one verification check failed."""


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover
        return "unknown"


def _num(x):
    """Plain JSON scalar; non-finite floats become strings."""
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, dict):
        return {k: _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_num(v) for v in x]
    return x


def _write_json(path: Path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_num(doc), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, columns, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for row in rows:
            wr.writerow([_cell(row.get(c)) for c in columns])


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _admit(spec: ProblemSpec):
    report = validate(spec)
    if not report.admissible:
        raise Inadmissible(report.message())
    return report


def _header(cfg: RunConfig) -> dict:
    return {"config": cfg.to_dict(), "config_hash": config_hash(cfg), "artifact_version": _version()}


# ------------------------------------------------------------------- solve

def run_solve(cfg: RunConfig, out: Path, *, override_threshold: bool = False,
              timing: bool = False) -> dict:
    t0 = time.perf_counter()
    spec = cfg.problem()
    report = validate(spec)
    if not report.admissible and not override_threshold:
        raise Inadmissible(report.message())
    grid = build_grid(spec.domain, spec.n, cfg.N)
    op = assemble_laplacian(grid)
    solver = cfg.solver
    if solver == "auto":
        solver = "linear" if spec.p == 2.0 else "nonlinear"
    if solver == "linear" and spec.p != 2.0:
        raise ConfigError("the linear solver needs p = 2")
    chash = config_hash(cfg)
    notes = []
    splits = []
    if solver == "linear":
        pencil = assemble_pencil(spec, grid, override_threshold=override_threshold, op=op)
        res = compute_spectrum(pencil, cfg.K)
        mus, resid = res.eigenvalues, res.residuals
        u, v = res.vector(0), res.partners[:, 0]
        notes += res.notes
        extra = {"gap": res.gap, "k_residuals": res.k_residuals, "method": res.method}
    else:
        if cfg.K > 1:
            notes.append("nonlinear solver returns the principal eigenvalue only")
        out_it = inverse_iteration(spec, grid, "auto", cfg.tol, cfg.max_iter,
                                   override_threshold=override_threshold, op=op)
        mus = np.array([out_it.mu])
        resid = np.array([out_it.trace.increment[-1]])
        u, v = out_it.u, out_it.v
        extra = out_it.to_dict()
        extra.pop("grid")
    mu1 = float(mus[0])
    for ratio in cfg.ratios:
        sp = split_eigenvalue(mu1, spec.p, ratio)
        row = {"config_hash": chash, "N": grid.N, "ratio": ratio,
               "lambda1": sp.lambda1, "lambda2": sp.lambda2}
        if spec.p == 2.0:
            sr = system_residuals(u, v, sp, spec, grid, op)
            row.update(residual_first=sr.first, residual_second=sr.second)
        splits.append(row)
    positivity = V.check_positivity(u, op)
    eig_rows = [{"config_hash": chash, "variant": grid.kind, "n": grid.n, "N": grid.N, "k": k + 1,
                 "mu": float(m), "residual": float(r)} for k, (m, r) in enumerate(zip(mus, resid))]
    record = {
        **_header(cfg),
        "solver": solver,
        "admissibility": report.to_dict(),
        "grid": grid.metadata(),
        "eigenvalues": eig_rows,
        "splits": splits,
        "solver_details": {**extra, "N": grid.N},
        "properties": {"positivity": {**positivity.to_dict(), "N": grid.N}},
        "notes": notes,
    }
    if timing:
        record["wall_time"] = time.perf_counter() - t0
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / cfg.outputs.get("json", "result.json"), record)
    _write_csv(out / cfg.outputs.get("csv", "eigenvalues.csv"), EIGEN_COLUMNS, eig_rows)
    _write_csv(out / "splits.csv", SPLIT_COLUMNS, splits)
    return record


# ------------------------------------------------------------------ verify

def default_suite() -> list:
    """Canonical checks, at grid sizes that keep the suite under a minute."""
    return [
        {"check": "symmetry", "a": 1.0, "b": 2.0, "p": 3.0, "n": 2, "N": 256},
        {"check": "symmetry", "a": 1.0, "b": 0.0, "p": 2.0, "n": 2, "N": 256, "tol": 1e-6},
        {"check": "positivity", "n": 1, "p": 2.0, "a": 0.0, "b": 0.0,
         "domain": {"variant": "interval", "R": 1.0}, "N": 256},
        {"check": "scaling_slope", "s": 1.0, "b": -5.5, "p": 2.0, "n": 2, "N": 1024,
         "k": [1, 2, 4, 8]},
        {"check": "scaling_slope", "s": 0.0, "b": 0.0, "p": 2.0, "n": 2, "N": 1024,
         "k": [1, 2, 4, 8]},
        {"check": "low_dim", "n": 1, "p": 2.0, "a": 0.0, "samples": 100, "N": 512},
        {"check": "rellich", "s": 0.0, "p": 2.0, "n": 5, "N": 256, "oracle": 25.0 / 16.0},
        {"check": "equivalence", "n": 1, "p": 2.5, "a": 0.0, "b": 0.0,
         "domain": {"variant": "interval", "R": 1.0}, "N": 64, "tol": 1e-8},
        {"check": "finite_energy", "n": 1, "p": 2.0, "a": 0.0, "b": 0.0,
         "domain": {"variant": "interval", "R": 1.0}, "N": 256},
    ]


def _item_spec(item, cfg: RunConfig) -> ProblemSpec:
    n = int(item.get("n", cfg.n))
    dom_doc = item.get("domain")
    if dom_doc is None:
        dom = Interval(1.0) if n == 1 else Ball(1.0)
    else:
        dom = domain_from_dict(dom_doc)
    return ProblemSpec(n, float(item.get("p", cfg.p)), float(item.get("a", cfg.a)),
                       float(item.get("b", cfg.b)), dom)


def _run_check(item: dict, cfg: RunConfig) -> V.PropertyReport:
    name = item.get("check")
    N = int(item.get("N", cfg.N))
    seed = int(item.get("seed", cfg.seed))
    if name == "symmetry":
        n = int(item.get("n", 2))
        dom = domain_from_dict(item["domain"]) if "domain" in item else None
        return V.check_symmetry(float(item["a"]), float(item["b"]), float(item["p"]), dom, N, n,
                                float(item.get("tol", 2e-2)))
    if name == "positivity":
        spec = _item_spec(item, cfg)
        _admit(spec)
        grid = build_grid(spec.domain, spec.n, N)
        op = assemble_laplacian(grid)
        k = int(item.get("k", 1))
        if spec.p == 2.0:
            res = compute_spectrum(assemble_pencil(spec, grid, op=op), k)
            u = res.vector(k - 1)
        else:
            if k != 1:
                raise ConfigError("positivity for p != 2 needs k = 1")
            _, u, _ = principal_pair(spec, grid, op=op)
        return V.check_positivity(u, op)
    if name == "scaling_slope":
        return V.scaling_slope(float(item["s"]), float(item["b"]), float(item["p"]), N,
                               item.get("k", [1, 2, 4, 8]), int(item.get("n", 1)),
                               float(item.get("tol", 0.05)))
    if name == "low_dim":
        return V.check_low_dim_inequality(int(item["n"]), float(item["a"]), float(item["p"]),
                                           int(item.get("samples", 100)), N=N, seed=seed)
    if name == "rellich":
        oracle = item.get("oracle")
        return V.estimate_rellich_constant(float(item["s"]), float(item["p"]), int(item["n"]), N,
                                           oracle=None if oracle is None else float(oracle))
    if name == "equivalence":
        spec = _item_spec(item, cfg)
        _admit(spec)
        grid = build_grid(spec.domain, spec.n, N)
        return V.check_equivalence(spec, grid, float(item.get("tol", 1e-8)))
    if name == "finite_energy":
        spec = _item_spec(item, cfg)
        _admit(spec)
        return V.finite_energy_report(spec, N)
    raise ConfigError(f"unknown check {name!r}")


def run_verify(cfg: RunConfig, out: Path, *, timing: bool = False) -> dict:
    checks = default_suite() if cfg.checks is None else cfg.checks
    if not isinstance(checks, list) or not all(isinstance(c, dict) for c in checks):
        raise ConfigError("checks must be a list of tables")
    chash = config_hash(cfg)
    entries = []
    for i, item in enumerate(checks):
        t0 = time.perf_counter()
        try:
            rep = _run_check(item, cfg)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"check {i} ({item.get('check')}): missing or bad field {exc}") from exc
        doc = {"config_hash": chash, "index": i, "request": item, "report": rep.to_dict()}
        if timing:
            doc["wall_time"] = time.perf_counter() - t0
        fname = f"reports/{i:02d}_{rep.name}.json"
        _write_json(out / fname, doc)
        log.info(rep.line())
        entries.append({"index": i, "check": rep.name, "passed": rep.passed,
                        "margin": rep.margin, "report": fname})
    manifest = {**_header(cfg), "checks": entries,
                "all_passed": all(e["passed"] for e in entries), "count": len(entries)}
    _write_json(out / "manifest.json", manifest)
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS,
               [{"config_hash": chash, **e} for e in entries])
    return manifest


# ------------------------------------------------------------------- sweep

def _sweep_points(cfg: RunConfig) -> list:
    sw = cfg.sweep
    if not isinstance(sw, dict):
        raise ConfigError("sweep needs a 'sweep' table")
    if "axes" in sw:
        axes = {k: list(v) for k, v in sorted(sw["axes"].items())}
    elif "axis" in sw:
        if "values" in sw:
            vals = list(sw["values"])
        else:
            try:
                vals = np.linspace(float(sw["start"]), float(sw["stop"]), int(sw["num"])).tolist()
            except KeyError as exc:
                raise ConfigError(f"sweep range needs start, stop and num ({exc})") from exc
        axes = {sw["axis"]: vals}
    else:
        raise ConfigError("sweep needs 'axis' or 'axes'")
    bad = set(axes) - {"a", "b", "p", "n", "N"}
    if bad:
        raise ConfigError(f"cannot sweep over {sorted(bad)}")
    names = list(axes)
    return [dict(zip(names, combo)) for combo in itertools.product(*axes.values())]


def _sweep_point(args):
    doc, override = args
    cfg = RunConfig.from_dict(doc)
    spec = cfg.problem()
    report = validate(spec)
    row = {"n": spec.n, "p": spec.p, "a": spec.a, "b": spec.b, "N": cfg.N,
           "margin_dimension": spec.a / spec.p_conj + spec.b / spec.p + 2.0,
           "margin_threshold": spec.s + spec.b + 2.0 * spec.p}
    if not report.admissible:
        return {**row, "status": "rejected", "reason": report.message()}
    try:
        grid = build_grid(spec.domain, spec.n, cfg.N)
        mu, _, _ = principal_pair(spec, grid, override_threshold=override,
                                  tol=cfg.tol, max_iter=cfg.max_iter)
    except ThresholdError as exc:
        return {**row, "status": "rejected", "reason": str(exc)}
    except (ConvergenceError, OperatorError, GridError) as exc:
        return {**row, "status": "failed", "reason": str(exc)}
    return {**row, "status": "ok", "mu1": mu}


def run_sweep(cfg: RunConfig, out: Path, *, workers: int = 1, override_threshold: bool = False,
              timing: bool = False) -> list:
    t0 = time.perf_counter()
    points = _sweep_points(cfg)
    base = cfg.to_dict()
    base.pop("sweep")
    docs = []
    for pt in points:
        d = dict(base)
        d.update(pt)
        RunConfig.from_dict(d)  # fail fast on malformed points
        docs.append((d, override_threshold))
    if workers > 1 and len(docs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, docs))
    else:
        rows = [_sweep_point(d) for d in docs]
    chash = config_hash(cfg)
    for i, row in enumerate(rows):
        row["config_hash"] = chash
        row["index"] = i
    doc = {**_header(cfg), "rows": rows}
    if timing:
        doc["wall_time"] = time.perf_counter() - t0
    _write_json(out / "sweep.json", doc)
    _write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
    return rows


# ------------------------------------------------------------- convergence

def richardson(N_list, values):
    """Observed order and extrapolated limit from the last three levels.

    The refinement ratio must be constant over those levels.
    """
    n1, n2, n3 = N_list[-3:]
    r = n2 / n1
    if abs(n3 / n2 - r) > 1e-12 * r:
        raise ConfigError("Richardson extrapolation needs a constant refinement ratio")
    f1, f2, f3 = values[-3:]
    d1, d2 = f1 - f2, f2 - f3
    if d2 == 0.0 or d1 / d2 <= 0.0:
        return float("nan"), float(f3)
    order = math.log(d1 / d2) / math.log(r)
    return order, f3 - d2 / (r**order - 1.0)


def run_convergence(cfg: RunConfig, out: Path, *, override_threshold: bool = False,
                    timing: bool = False) -> dict:
    t0 = time.perf_counter()
    N_list = cfg.N_list
    if not N_list or len(N_list) < 3:
        raise ConfigError("N_list needs at least three entries")
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ConfigError("N_list must be strictly ascending")
    spec = cfg.problem()
    if not override_threshold:
        _admit(spec)
    chash = config_hash(cfg)
    rows = []
    for N in N_list:
        grid = build_grid(spec.domain, spec.n, N)
        mu, _, _ = principal_pair(spec, grid, override_threshold=override_threshold,
                                  tol=cfg.tol, max_iter=cfg.max_iter)
        rows.append({"config_hash": chash, "N": N, "h": grid.h[0], "mu1": mu})
    order, limit = richardson(N_list, [r["mu1"] for r in rows])
    doc = {**_header(cfg), "rows": rows, "observed_order": order, "extrapolated": limit,
           "N": N_list}
    if timing:
        doc["wall_time"] = time.perf_counter() - t0
    _write_json(out / "convergence.json", doc)
    _write_csv(out / "convergence.csv", CONVERGENCE_COLUMNS, rows)
    return doc


# --------------------------------------------------------------- dump-grid

def run_dump_grid(cfg: RunConfig, out: Path) -> dict:
    spec = cfg.problem()
    grid = build_grid(spec.domain, spec.n, cfg.N)
    op = assemble_laplacian(grid)
    doc = {**_header(cfg), "grid": grid.to_dict(), "operator": op.to_triplets()}
    _write_json(out / "grid.json", doc)
    return doc


# -------------------------------------------------------------------- main

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hle-eigen",
                                 description="Principal eigenvalues of the weighted Navier system.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("solve", "verify", "sweep", "converge", "dump-grid"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, required=name != "verify",
                        help="JSON or TOML run configuration")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        sp.add_argument("--workers", type=int, default=1, help="sweep worker processes")
        sp.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        sp.add_argument("--override-threshold-guard", action="store_true",
                        help="admit parameters on the threshold s+b+2p = 0")
        sp.add_argument("--timing", action="store_true",
                        help="record wall time (outputs are then not reproducible bit for bit)")
    return ap


def _setup_logging():
    level = os.environ.get("HLE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config is not None else RunConfig()
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be non-negative")
            cfg = cfg.with_params(seed=args.seed)
        if args.workers < 1:
            raise ConfigError("workers must be positive")
        ovr = args.override_threshold_guard
        if args.command == "solve":
            rec = run_solve(cfg, args.out, override_threshold=ovr, timing=args.timing)
            print(" ".join(f"{r['mu']:.10g}" for r in rec["eigenvalues"]))
        elif args.command == "verify":
            man = run_verify(cfg, args.out, timing=args.timing)
            for e in man["checks"]:
                print(f"[{'PASS' if e['passed'] else 'FAIL'}] {e['check']}: margin={e['margin']:.4g}")
            if not man["all_passed"]:
                raise CheckFailed(f"{sum(not e['passed'] for e in man['checks'])} check(s) failed")
        elif args.command == "sweep":
            rows = run_sweep(cfg, args.out, workers=args.workers, override_threshold=ovr,
                             timing=args.timing)
            print(f"{sum(r['status'] == 'ok' for r in rows)} of {len(rows)} points solved")
        elif args.command == "converge":
            doc = run_convergence(cfg, args.out, override_threshold=ovr, timing=args.timing)
            print(f"order {doc['observed_order']:.4f}  extrapolated {doc['extrapolated']:.10g}")
        else:
            run_dump_grid(cfg, args.out)
    except (ConfigError, GridError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (Inadmissible, ThresholdError) as exc:
        msg = str(exc)
        print(msg if msg.startswith("inadmissible") else f"inadmissible: {msg}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except (ConvergenceError, OperatorError, scipy.linalg.LinAlgError,
            scipy.sparse.linalg.ArpackError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except CheckFailed as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CHECK
    except ValueError as exc:
        # remaining ValueErrors come from parameter validation
        print(f"inadmissible: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
