"""Problem parameters, exponent arithmetic and admissibility."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "Interval",
    "Ball",
    "Rectangle",
    "ProblemSpec",
    "DerivedExponents",
    "EigenvalueSplit",
    "Condition",
    "AdmissibilityReport",
    "validate",
    "derive_exponents",
    "split_eigenvalue",
    "conjugate",
    "domain_from_dict",
]

EXPONENT_TOL = 1e-14


@dataclass(frozen=True)
class Interval:
    """The interval (-R, R), n = 1."""

    R: float = 1.0
    kind = "interval"

    def to_dict(self):
        return {"variant": self.kind, "R": self.R}


@dataclass(frozen=True)
class Ball:
    """The ball |x| < R in any dimension; only the radial class is discretized."""

    R: float = 1.0
    kind = "ball"

    def to_dict(self):
        return {"variant": self.kind, "R": self.R}


@dataclass(frozen=True)
class Rectangle:
    """The rectangle (-Lx, Lx) x (-Ly, Ly), n = 2."""

    Lx: float = 1.0
    Ly: float = 1.0
    kind = "rectangle"

    def to_dict(self):
        return {"variant": self.kind, "Lx": self.Lx, "Ly": self.Ly}


def domain_from_dict(d):
    variant = d.get("variant", "").lower()
    if variant == "interval":
        dom = Interval(float(d.get("R", 1.0)))
        extents = [dom.R]
    elif variant == "ball":
        dom = Ball(float(d.get("R", 1.0)))
        extents = [dom.R]
    elif variant == "rectangle":
        dom = Rectangle(float(d.get("Lx", 1.0)), float(d.get("Ly", 1.0)))
        extents = [dom.Lx, dom.Ly]
    else:
        raise ValueError(f"unknown domain variant {variant!r}")
    if not all(math.isfinite(e) and e > 0 for e in extents):
        raise ValueError(f"domain extents must be positive, got {extents}")
    return dom


def conjugate(p: float) -> float:
    """Hölder conjugate p/(p-1)."""
    return p / (p - 1.0)


@dataclass(frozen=True)
class ProblemSpec:
    """Full parameterization of the eigenvalue system.

    ``a`` weights the first equation (``-Δu = λ1 |x|^a |v|^{p'-2} v``),
    ``b`` the second (``-Δv = λ2 |x|^b |u|^{p-2} u``).
    """

    n: int
    p: float
    a: float
    b: float
    domain: Interval | Ball | Rectangle = field(default_factory=Interval)

    def __post_init__(self):
        if isinstance(self.domain, Interval) and self.n != 1:
            raise ValueError("Interval domain requires n = 1")
        if isinstance(self.domain, Rectangle) and self.n != 2:
            raise ValueError("Rectangle domain requires n = 2")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.n}")

    @property
    def p_conj(self) -> float:
        return conjugate(self.p)

    @property
    def s(self) -> float:
        return self.a * (self.p - 1.0)

    def swapped(self) -> "ProblemSpec":
        """The dual parameter set (b, a, p')."""
        return ProblemSpec(self.n, self.p_conj, self.b, self.a, self.domain)

    def to_dict(self):
        return {"n": self.n, "p": self.p, "a": self.a, "b": self.b,
                "domain": self.domain.to_dict()}


@dataclass(frozen=True)
class DerivedExponents:
    p_conj: float
    s: float
    p_hat: float


def derive_exponents(spec: ProblemSpec) -> DerivedExponents:
    if not spec.p > 1:
        raise ValueError(f"p must exceed 1, got {spec.p}")
    s = spec.a * (spec.p - 1.0)
    if s >= 0:
        p_hat = spec.p
    else:
        p_hat = spec.n * spec.p / (spec.n - s)
    return DerivedExponents(p_conj=conjugate(spec.p), s=s, p_hat=p_hat)


@dataclass(frozen=True)
class Condition:
    name: str
    margin: float
    passed: bool
    note: str = ""


@dataclass(frozen=True)
class AdmissibilityReport:
    spec: ProblemSpec
    conditions: tuple[Condition, ...]

    @property
    def admissible(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def failures(self):
        return [c for c in self.conditions if not c.passed]

    def message(self) -> str:
        if self.admissible:
            return "admissible"
        parts = [f"{c.name} violated (margin {c.margin:.6g})" for c in self.failures]
        return "inadmissible: " + "; ".join(parts)

    def to_dict(self):
        return {
            "admissible": self.admissible,
            "conditions": [
                {"name": c.name, "margin": c.margin, "passed": c.passed, "note": c.note}
                for c in self.conditions
            ],
        }


def validate(spec: ProblemSpec) -> AdmissibilityReport:
    """Check every admissibility condition and report signed margins.

    Inadmissible parameters produce a failing report; nothing is raised.
    """
    n, p, a, b = spec.n, spec.p, spec.a, spec.b
    for name, val in (("p", p), ("a", a), ("b", b)):
        if not math.isfinite(val):
            raise ValueError(f"{name} must be finite, got {val}")
    conds = [Condition("p>1", p - 1.0, p > 1.0)]
    if p <= 1.0:
        return AdmissibilityReport(spec, tuple(conds))

    pc = conjugate(p)
    s = a * (p - 1.0)
    low_dim = n <= 2
    coupling = a / pc + b / p + 2.0
    conds += [
        Condition("a>-n", a + n, a > -n),
        Condition("b>-n", b + n, b > -n),
        Condition(
            "a/p'+b/p+2>0",
            coupling,
            coupling > 0,
            "implied by a,b>-n for n=1,2" if low_dim else "",
        ),
        Condition("s>n-np", s - (n - n * p), s > n - n * p),
        Condition("s+b+2p>0", s + b + 2 * p, s + b + 2 * p > 0),
    ]
    if p == 2.0:
        conds.append(Condition("a+b+4>0", a + b + 4.0, a + b + 4.0 > 0))
    return AdmissibilityReport(spec, tuple(conds))


@dataclass(frozen=True)
class EigenvalueSplit:
    lambda1: float
    lambda2: float
    mu: float
    p: float

    def defect(self) -> float:
        """Relative defect of the splitting relation, measured on its p'-th root.

        For positive pairs |λ1|^{p-1}λ1 |λ2|^{p'-1}λ2 = μ^{p'} is the same as
        λ1^{p-1} λ2 = μ. Comparing the root keeps the measure well conditioned
        as p → 1, where p' and hence μ^{p'} blow up.
        """
        l1, l2 = self.lambda1, self.lambda2
        if l1 <= 0 or l2 <= 0:
            return math.inf
        return abs(math.expm1((self.p - 1.0) * math.log(l1) + math.log(l2) - math.log(self.mu)))


def split_eigenvalue(mu: float, p: float, ratio: float = 1.0) -> EigenvalueSplit:
    """Positive pair (λ1, λ2) with λ1^p λ2^{p'} = μ^{p'} and λ1/λ2 = ratio."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if not ratio > 0:
        raise ValueError(f"ratio must be positive, got {ratio}")
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    pc = conjugate(p)
    # λ2^{p+p'} ratio^p = μ^{p'}, in logs to stay accurate over wide ranges
    log_l2 = (pc * math.log(mu) - p * math.log(ratio)) / (p + pc)
    l2 = math.exp(log_l2)
    l1 = ratio * l2
    return EigenvalueSplit(lambda1=l1, lambda2=l2, mu=mu, p=p)
