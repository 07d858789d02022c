from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import matrix_compose

from bsboundary.affine import (
    AffineExact,
    AffineReal,
    act_on_padic,
    act_on_real,
    compose,
    from_json,
    inverse,
    to_json,
)
from bsboundary.errors import PrimeMismatchError
from bsboundary.padic import PAdicRational, TruncatedPAdic, truncate


@st.composite
def exact_elements(draw, p=2):
    n = draw(st.integers(-1000, 1000))
    e = draw(st.integers(0, 6))
    return AffineExact(PAdicRational(p, n, e), draw(st.integers(-5, 5)))


def as_pair(g):
    g = g.to_real()
    return (g.b, g.a)


def test_compose_examples():
    g = AffineExact.make(1, 1, 2)
    assert compose(AffineExact.identity(2), g) == g
    assert compose(g, g) == AffineExact.make(3, 2, 2)
    assert inverse(g) == AffineExact.make(Fraction(-1, 2), -1, 2)
    assert compose(g, inverse(g)).is_identity()
    assert inverse(AffineExact.identity(2)).is_identity()


def test_real_action_examples():
    assert act_on_real(AffineReal.identity(2), 0.37) == 0.37
    assert act_on_real(AffineExact.make(1, 1, 2), 0) == 1
    assert act_on_real(AffineReal(0.5, -1, 2), Fraction(3)) == 2


def test_padic_action_examples():
    x = truncate(PAdicRational(2, 5), 6)
    assert act_on_padic(AffineExact.identity(2), x) == x
    one = act_on_padic(AffineExact.make(1, 0, 2), TruncatedPAdic.zero(2, 6))
    assert one.agrees_with(truncate(PAdicRational(2, 1), 6))


def test_mixed_composition_is_real():
    g = compose(AffineReal(0.3, 1, 2), AffineExact.make("1/2", -1, 2))
    assert isinstance(g, AffineReal)
    assert g.b == Fraction(0.3) + 1 and g.m == 0


def test_real_translation_validation():
    with pytest.raises(ValueError):
        AffineReal(float("nan"), 0, 2)
    with pytest.raises(ValueError):
        AffineReal(1.0, 0, 6)
    with pytest.raises(TypeError):
        AffineReal(object(), 0, 2)
    # floats are stored exactly
    assert AffineReal(0.1, 0, 2).b == Fraction(0.1)


def test_prime_mismatch():
    with pytest.raises(PrimeMismatchError):
        compose(AffineExact.identity(2), AffineExact.identity(3))
    with pytest.raises(PrimeMismatchError):
        act_on_padic(AffineExact.identity(3), TruncatedPAdic.zero(2, 4))


def test_json_round_trip():
    g = AffineExact.make("3/8", 2, 2)
    assert to_json(g) == '["3/2^3", 2]'
    assert from_json(to_json(g), 2) == g
    h = AffineReal(0.3, -1, 3)
    assert from_json(to_json(h), 3) == h
    third = AffineReal(Fraction(1, 3), 0, 2)
    assert from_json(to_json(third), 2) == third


@given(exact_elements(), exact_elements(), exact_elements())
def test_associativity(g, h, k):
    assert compose(compose(g, h), k) == compose(g, compose(h, k))


@given(exact_elements(), exact_elements())
def test_compose_matches_matrix_product(g, h):
    assert as_pair(compose(g, h)) == matrix_compose(as_pair(g), as_pair(h))


@given(exact_elements())
def test_inverse(g):
    assert compose(g, inverse(g)).is_identity()
    assert compose(inverse(g), g).is_identity()
    assert inverse(inverse(g)) == g


@given(exact_elements(), exact_elements(), st.fractions(max_denominator=50))
def test_real_action_compatible(g, h, t):
    assert act_on_real(g, act_on_real(h, t)) == act_on_real(compose(g, h), t)


@given(exact_elements(), exact_elements(), st.integers(-1000, 1000), st.integers(0, 5))
def test_padic_action_compatible(g, h, n, e):
    x_exact = PAdicRational(2, n, e)
    x = truncate(x_exact, 20) if not x_exact.is_zero() else TruncatedPAdic.zero(2, 20)
    lhs = act_on_padic(g, act_on_padic(h, x))
    rhs = act_on_padic(compose(g, h), x)
    assert lhs.agrees_with(rhs)
    # exact oracle: p^m x + b computed in Z[1/p]
    exact = x_exact.mul_by_power(h.m) + h.b
    if not exact.is_zero():
        assert act_on_padic(h, x).agrees_with(truncate(exact, 20 + h.m))
