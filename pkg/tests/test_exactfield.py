"""Exact rational / polynomial / rational-function arithmetic tests."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tractorlab.exactfield import (
    FieldError,
    Poly,
    PoleError,
    RatFun,
    default_vars,
    eval_at,
    field_arith,
    partial,
    poly_gcd,
    rat_from_str,
    rat_to_str,
)

V2 = default_vars(2)


def x_y():
    return RatFun.variable(V2, 0), RatFun.variable(V2, 1)


# ---------------------------------------------------------------------------
# deterministic examples
# ---------------------------------------------------------------------------


def test_add_forces_cancellation():
    x, _ = x_y()
    one = RatFun.one(V2)
    assert field_arith(x / (one + x), one / (one + x), "add") == 1


def test_exact_gcd_reduction():
    x, y = x_y()
    assert field_arith(x * x - y * y, x - y, "div") == x + y


def test_rational_constant_product():
    a = RatFun.const(V2, Fraction(1, 2))
    b = RatFun.const(V2, Fraction(2, 3))
    assert field_arith(a, b, "mul") == RatFun.const(V2, Fraction(1, 3))


def test_division_by_zero_is_an_error():
    x, _ = x_y()
    with pytest.raises(FieldError):
        field_arith(x, RatFun.zero(V2), "div")


def test_partial_monomial():
    x, y = x_y()
    assert partial(x * x * y, 1) == 2 * x * y


def test_partial_quotient_rule():
    x, _ = x_y()
    one = RatFun.one(V2)
    f = one / (one + x * x)
    expected = (-2 * x) / ((one + x * x) ** 2)
    assert partial(f, 1) == expected


def test_partial_of_independent_variable():
    x, _ = x_y()
    assert partial(x, 2).is_zero()


def test_partial_index_validation():
    x, _ = x_y()
    with pytest.raises(ValueError):
        partial(x, 0)
    with pytest.raises(ValueError):
        partial(x, 3)


def test_eval_at_simple():
    x, y = x_y()
    one = RatFun.one(V2)
    assert eval_at(x / (one + y), (1, 1)) == Fraction(1, 2)
    assert eval_at(RatFun.zero(V2), (7, -3)) == 0


def test_eval_at_pole():
    x, _ = x_y()
    one = RatFun.one(V2)
    with pytest.raises(PoleError):
        eval_at(one / (one - x), (1, 0))


def test_canonical_denominator_leading_coefficient_positive():
    x, y = x_y()
    one = RatFun.one(V2)
    f = one / (-x - y)
    assert f.den == (x + y).num
    assert f.num == (-one).num


def test_rat_string_round_trip():
    for q in (Fraction(3), Fraction(-7, 2), Fraction(0)):
        assert rat_from_str(rat_to_str(q)) == q


def test_poly_json_round_trip():
    x, y = x_y()
    p = (x * x * y - y / 3 + Fraction(5, 7)).num
    assert Poly.from_json(V2, p.to_json()) == p


def test_ratfun_json_round_trip():
    x, y = x_y()
    one = RatFun.one(V2)
    f = (x * x - y) / (one + y * y)
    assert RatFun.from_json(V2, f.to_json()) == f


def test_poly_gcd_full_reduction():
    x, y = x_y()
    f = ((x + y) ** 2 * (x - y)).num
    g = ((x + y) * (x * x + 1)).num
    h = poly_gcd(f, g)
    assert h == (x + y).num
    assert poly_gcd(f.exact_div(h), g.exact_div(h)).is_const()


# ---------------------------------------------------------------------------
# randomized properties
# ---------------------------------------------------------------------------


@st.composite
def polys(draw, max_terms=4, max_deg=3):
    n_terms = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(n_terms):
        e = (draw(st.integers(0, max_deg)), draw(st.integers(0, max_deg)))
        c = Fraction(draw(st.integers(-6, 6)), draw(st.integers(1, 4)))
        terms[e] = terms.get(e, 0) + c
    return Poly(V2, terms)


@st.composite
def ratfuns(draw):
    num = draw(polys())
    den = draw(polys(max_terms=3, max_deg=2))
    if den.is_zero():
        den = Poly.const(V2, 1)
    return RatFun(num, den)


@settings(max_examples=60, deadline=None)
@given(ratfuns(), ratfuns(), ratfuns())
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a
    assert a * b == b * a


@settings(max_examples=60, deadline=None)
@given(ratfuns())
def test_normalization_idempotent(f):
    again = RatFun(f.num, f.den)
    assert again.num == f.num and again.den == f.den


@settings(max_examples=40, deadline=None)
@given(ratfuns())
def test_partials_commute(f):
    assert f.partial(0).partial(1) == f.partial(1).partial(0)


@settings(max_examples=40, deadline=None)
@given(ratfuns(), ratfuns())
def test_eval_is_ring_morphism(a, b):
    pt = (Fraction(2, 3), Fraction(-1, 2))
    try:
        va, vb = a.eval(pt), b.eval(pt)
    except PoleError:
        return
    assert (a * b).eval(pt) == va * vb
    assert (a + b).eval(pt) == va + vb


@settings(max_examples=30, deadline=None)
@given(polys(max_terms=3, max_deg=2), polys(max_terms=3, max_deg=2), polys(max_terms=2, max_deg=2))
def test_gcd_divides_and_leaves_coprime_cofactors(f, g, h):
    if f.is_zero() or g.is_zero() or h.is_zero():
        return
    fh, gh = f * h, g * h
    d = poly_gcd(fh, gh)
    assert fh.exact_div(d) is not None
    assert gh.exact_div(d) is not None
    # h divides the gcd, and the cofactors are coprime (full reduction)
    assert d.exact_div(poly_gcd(d, h)) is not None and poly_gcd(d, h).coef == \
        Poly._raw(h.vars, Fraction(1), h.coef).coef
    assert poly_gcd(fh.exact_div(d), gh.exact_div(d)).is_const()


@settings(max_examples=40, deadline=None)
@given(ratfuns())
def test_subtraction_gives_zero(f):
    assert (f - f).is_zero()
    assert (f - f) == RatFun.zero(V2)
