"""Run configuration: parsing, canonical serialization and provenance hash."""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from .problem import ProblemSpec, domain_from_dict

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = ["ConfigError", "RunConfig", "load_config", "config_hash", "canonical_json"]

SOLVERS = ("auto", "linear", "nonlinear")


class ConfigError(ValueError):
    """Unreadable or invalid configuration document."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass
class RunConfig:
    """Everything a run needs. Optional sections drive sweep, converge and verify."""

    n: int = 1
    p: float = 2.0
    a: float = 0.0
    b: float = 0.0
    domain: dict = field(default_factory=lambda: {"variant": "interval", "R": 1.0})
    N: int = 256
    solver: str = "auto"
    tol: float = 1e-10
    max_iter: int = 500
    K: int = 1
    seed: int = 0
    ratios: list = field(default_factory=lambda: [1.0])
    outputs: dict = field(default_factory=lambda: {"json": "result.json", "csv": "eigenvalues.csv"})
    sweep: dict | None = None
    N_list: list | None = None
    checks: list | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("configuration must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        try:
            cfg = cls(**doc)
            cfg._coerce()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    def _coerce(self):
        if int(self.n) != self.n or int(self.N) != self.N or int(self.K) != self.K:
            raise ConfigError("n, N and K must be integers")
        self.n, self.N, self.K = int(self.n), int(self.N), int(self.K)
        self.max_iter, self.seed = int(self.max_iter), int(self.seed)
        self.p, self.a, self.b, self.tol = float(self.p), float(self.a), float(self.b), float(self.tol)
        if not all(math.isfinite(x) for x in (self.p, self.a, self.b, self.tol)):
            raise ConfigError("p, a, b and tol must be finite")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.K < 1 or self.tol <= 0 or self.max_iter < 1 or self.seed < 0:
            raise ConfigError("K, tol and max_iter must be positive and seed non-negative")
        self.ratios = [float(r) for r in self.ratios]
        if not self.ratios or any(not (r > 0 and math.isfinite(r)) for r in self.ratios):
            raise ConfigError("ratios must be a non-empty list of positive numbers")
        self.domain = dict(self.domain)
        if self.N_list is not None:
            self.N_list = [int(x) for x in self.N_list]

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if val is not None:
                out[f.name] = val
        return out

    def problem(self) -> ProblemSpec:
        try:
            dom = domain_from_dict(self.domain)
            return ProblemSpec(self.n, self.p, self.a, self.b, dom)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def with_params(self, **changes) -> "RunConfig":
        doc = self.to_dict()
        doc.update(changes)
        return RunConfig.from_dict(doc)


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(canonical_json(cfg.to_dict()).encode()).hexdigest()[:16]


def load_config(path) -> RunConfig:
    """Read a JSON or TOML document (chosen by suffix, JSON otherwise)."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".toml":
            doc = tomllib.loads(raw.decode())
        else:
            doc = json.loads(raw)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return RunConfig.from_dict(doc)
