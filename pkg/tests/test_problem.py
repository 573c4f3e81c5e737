import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hle_eigen.problem import (Ball, Interval, ProblemSpec, Rectangle, conjugate,
                               derive_exponents, domain_from_dict, split_eigenvalue, validate)


def conditions(report):
    return {c.name: c for c in report.conditions}


def test_trivial_weights_admissible():
    rep = validate(ProblemSpec(3, 2.0, 0.0, 0.0, Ball(1.0)))
    assert rep.admissible
    assert conditions(rep)["a/p'+b/p+2>0"].margin == pytest.approx(2.0)


def test_coupling_violation_reported():
    rep = validate(ProblemSpec(3, 2.0, -2.0, -3.0, Ball(1.0)))
    assert not rep.admissible
    c = conditions(rep)["a+b+4>0"]
    assert not c.passed and c.margin == pytest.approx(-1.0)
    assert "a+b+4>0" in rep.message()


def test_low_dimension_note():
    rep = validate(ProblemSpec(1, 2.0, -0.5, -0.5, Interval(1.0)))
    c = conditions(rep)["a/p'+b/p+2>0"]
    assert rep.admissible and c.margin == pytest.approx(1.5)
    assert "implied" in c.note


def test_p_not_above_one():
    rep = validate(ProblemSpec(1, 1.0, 0.0, 0.0, Interval(1.0)))
    assert not rep.admissible


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        validate(ProblemSpec(1, 2.0, math.nan, 0.0, Interval(1.0)))


def test_domain_dimension_mismatch():
    with pytest.raises(ValueError):
        ProblemSpec(2, 2.0, 0.0, 0.0, Interval(1.0))
    with pytest.raises(ValueError):
        ProblemSpec(3, 2.0, 0.0, 0.0, Rectangle(1.0, 1.0))


def test_domain_round_trip():
    for dom in (Interval(2.0), Ball(0.5), Rectangle(1.0, 3.0)):
        assert domain_from_dict(dom.to_dict()) == dom
    with pytest.raises(ValueError):
        domain_from_dict({"variant": "ball", "R": -1})
    with pytest.raises(ValueError):
        domain_from_dict({"variant": "annulus"})


@pytest.mark.parametrize("p,a,n,expect", [
    (2.0, 1.0, 3, (2.0, 1.0, 2.0)),
    (2.0, -1.0, 3, (2.0, -1.0, 1.5)),
    (3.0, 2.0, 3, (1.5, 4.0, 3.0)),
])
def test_derive_exponents(p, a, n, expect):
    d = derive_exponents(ProblemSpec(n, p, a, 0.0, Ball(1.0)))
    assert (d.p_conj, d.s, d.p_hat) == pytest.approx(expect)


def test_split_examples():
    sp = split_eigenvalue(9.0, 2.0, 1.0)
    assert (sp.lambda1, sp.lambda2) == pytest.approx((3.0, 3.0))
    sp = split_eigenvalue(4.0, 3.0, 2.0)
    assert (sp.lambda1, sp.lambda2) == pytest.approx((2.0, 1.0))
    sp = split_eigenvalue(1.0, 1.7, 1.0)
    assert (sp.lambda1, sp.lambda2) == pytest.approx((1.0, 1.0))


@pytest.mark.parametrize("mu,ratio", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
def test_split_domain_errors(mu, ratio):
    with pytest.raises(ValueError):
        split_eigenvalue(mu, 2.0, ratio)


finite = dict(allow_nan=False, allow_infinity=False)


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1.0001, 10.0))
def test_split_round_trip(mu, ratio, p):
    sp = split_eigenvalue(mu, p, ratio)
    assert sp.defect() < 1e-12
    assert sp.lambda1 / sp.lambda2 == pytest.approx(ratio, rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(st.floats(1.0001, 20.0))
def test_conjugate_identity(p):
    assert abs(1 / p + 1 / conjugate(p) - 1) < 1e-14


@settings(max_examples=500, deadline=None)
@given(st.integers(1, 8), st.floats(1.01, 8.0), st.floats(-10, 10, **finite),
       st.floats(-10, 10, **finite))
def test_coupling_and_threshold_agree(n, p, a, b):
    c = conditions(validate(ProblemSpec(n, p, a, b, Ball(1.0))))
    lhs, rhs = c["a/p'+b/p+2>0"].margin, c["s+b+2p>0"].margin
    # s + b + 2p = p (a/p' + b/p + 2)
    assert rhs == pytest.approx(p * lhs, abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 2), st.floats(1.01, 6.0), st.floats(-0.999, 5.0), st.floats(-0.999, 5.0))
def test_low_dimension_admissible(n, p, a_frac, b_frac):
    spec = ProblemSpec(n, p, a_frac * n, b_frac * n, Ball(1.0))
    assert validate(spec).admissible


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 6), st.floats(1.01, 6.0), st.floats(-6, 6, **finite),
       st.floats(-6, 6, **finite), st.floats(0, 3), st.floats(0, 3))
def test_validate_monotone(n, p, a, b, da, db):
    lo = validate(ProblemSpec(n, p, a, b, Ball(1.0)))
    hi = validate(ProblemSpec(n, p, a + da, b + db, Ball(1.0)))
    if lo.admissible:
        assert hi.admissible


def test_admissible_implies_s_bound():
    spec = ProblemSpec(3, 2.5, -0.9, 0.2, Ball(1.0))
    assert validate(spec).admissible
    assert spec.s > spec.n - spec.n * spec.p
