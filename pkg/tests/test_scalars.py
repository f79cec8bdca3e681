from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lams.scalars import (RINGS, RingError, Scalar, check_ring, half_sqrt2, ring_add, ring_eq,
                          ring_mul, ring_neg, ring_one, ring_zero)

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)


def scalars(ring: str):
    if ring == "z":
        return st.integers(-30, 30).map(lambda n: Scalar.of(n, "z"))
    if ring == "q":
        return fractions.map(lambda f: Scalar.of(f, "q"))
    return st.tuples(fractions, fractions, fractions, fractions).map(lambda p: Scalar("qsi", p))


any_ring_triple = st.sampled_from(RINGS).flatmap(
    lambda r: st.tuples(scalars(r), scalars(r), scalars(r)))


def qsi(a=0, b=0, c=0, d=0) -> Scalar:
    return Scalar("qsi", (a, b, c, d))


def test_half_plus_half_is_one():
    h = Scalar.of(Fraction(1, 2))
    assert ring_add(h, h) == ring_one()


def test_half_sqrt2_doubles_to_sqrt2():
    assert half_sqrt2() + half_sqrt2() == Scalar.sqrt2()


def test_half_sqrt2_squared():
    assert ring_mul(half_sqrt2(), half_sqrt2()) == Scalar.of(Fraction(1, 2))


def test_i_squared():
    i = Scalar.imag()
    assert ring_mul(i, i) == Scalar.of(-1)


def test_one_plus_i_times_one_minus_i():
    assert ring_mul(qsi(1, 0, 1), qsi(1, 0, -1)) == Scalar.of(2)


def test_sqrt2_squared_is_two():
    assert ring_eq(Scalar.sqrt2() * Scalar.sqrt2(), Scalar.of(2))


def test_neg_one():
    assert ring_neg(ring_one()) == Scalar.of(-1)


def test_components_in_lowest_terms():
    x = Scalar("qsi", (Fraction(2, 4), Fraction(-3, -6), 0, 0))
    assert x.parts == (Fraction(1, 2), Fraction(1, 2), 0, 0)
    assert all(p.denominator > 0 for p in x.parts)


def test_integer_ring_rejects_fractions():
    with pytest.raises(RingError, match="not an integer"):
        Scalar.of(Fraction(1, 2), "z")


def test_sqrt2_only_in_qsi():
    with pytest.raises(RingError):
        Scalar.sqrt2("q")
    with pytest.raises(RingError):
        Scalar.imag("z")


def test_ring_mismatch():
    with pytest.raises(RingError):
        Scalar.of(1, "q") + Scalar.of(1, "z")


def test_unknown_ring():
    with pytest.raises(RingError):
        check_ring("c")


def test_immutable():
    with pytest.raises(AttributeError):
        ring_one().parts = (2, 0, 0, 0)


@pytest.mark.parametrize("x,plain,term", [
    (half_sqrt2(), "1/2*sqrt2", "(1/2)*sqrt2"),
    (qsi(1, 0, 1), "1 + i", "(1 + i)"),
    (qsi(0, Fraction(-1, 2)), "-1/2*sqrt2", "(-(1/2)*sqrt2)"),
    (qsi(0, 0, 0, 1), "i*sqrt2", "i*sqrt2"),
    (ring_zero(), "0", "0"),
])
def test_render(x, plain, term):
    assert x.render() == plain
    assert x.render_term() == term


def test_componentwise_oracle_mul():
    # (a + b r + c j + d jr) with r^2 = 2, j^2 = -1, expanded by hand over the basis
    x, y = qsi(1, 2, 3, 4), qsi(5, 6, 7, 8)
    a = 1 * 5 + 2 * 2 * 6 - 3 * 7 - 2 * 4 * 8
    b = 1 * 6 + 2 * 5 - 3 * 8 - 4 * 7
    c = 1 * 7 + 3 * 5 + 2 * 2 * 8 + 2 * 4 * 6
    d = 1 * 8 + 4 * 5 + 2 * 7 + 3 * 6
    assert x * y == qsi(a, b, c, d)


@settings(max_examples=1000, deadline=None)
@given(any_ring_triple)
def test_ring_axioms(triple):
    x, y, z = triple
    r = x.ring
    assert (x + y) + z == x + (y + z)
    assert x * (y + z) == x * y + x * z
    assert x * y == y * x
    assert (x * y) * z == x * (y * z)
    assert x + ring_zero(r) == x
    assert x * ring_one(r) == x
    assert ring_add(x, ring_neg(x)) == ring_zero(r)
    assert Scalar(r, x.parts) == x


@settings(max_examples=300, deadline=None)
@given(any_ring_triple)
def test_equality_is_structural(triple):
    x, y, _ = triple
    assert ring_eq(x, y) == (x.parts == y.parts)
    assert (hash(x) == hash(y)) or x != y
