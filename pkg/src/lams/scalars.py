"""Exact commutative rings used as scalars.

Three rings share one interface: ``qsi`` is Q(sqrt2, i), ``q`` the rationals
and ``z`` the integers.  Elements of Q(sqrt2, i) are stored as four rationals
``(a, b, c, d)`` meaning ``a + b*sqrt2 + c*i + d*i*sqrt2``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

RINGS = ("qsi", "q", "z")
DEFAULT_RING = "qsi"

_WIDTH = {"qsi": 4, "q": 1, "z": 1}


class RingError(ValueError):
    """Raised on ring mismatch or on a literal the ring cannot hold."""


def check_ring(name: str) -> str:
    if name not in RINGS:
        raise RingError(f"unknown ring {name!r} (expected one of {', '.join(RINGS)})")
    return name


def _canon(ring: str, parts: Iterable) -> tuple:
    if ring == "z":
        out = []
        for p in parts:
            f = Fraction(p)
            if f.denominator != 1:
                raise RingError(f"{f} is not an integer")
            out.append(int(f))
        return tuple(out)
    return tuple(Fraction(p) for p in parts)


class Scalar:
    """Immutable ring element in canonical form."""

    __slots__ = ("ring", "parts", "_hash")

    def __init__(self, ring: str, parts: Iterable) -> None:
        check_ring(ring)
        parts = _canon(ring, parts)
        if len(parts) != _WIDTH[ring]:
            raise RingError(f"ring {ring} expects {_WIDTH[ring]} components")
        object.__setattr__(self, "ring", ring)
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "_hash", hash((ring, parts)))

    def __setattr__(self, key, value):
        raise AttributeError("Scalar is immutable")

    # construction

    @classmethod
    def of(cls, value, ring: str = DEFAULT_RING) -> "Scalar":
        """Embed an int or Fraction."""
        width = _WIDTH[check_ring(ring)]
        return cls(ring, (Fraction(value),) + (0,) * (width - 1))

    @classmethod
    def zero(cls, ring: str = DEFAULT_RING) -> "Scalar":
        return cls.of(0, ring)

    @classmethod
    def one(cls, ring: str = DEFAULT_RING) -> "Scalar":
        return cls.of(1, ring)

    @classmethod
    def sqrt2(cls, ring: str = DEFAULT_RING) -> "Scalar":
        if ring != "qsi":
            raise RingError(f"sqrt2 is not an element of ring {ring}")
        return cls(ring, (0, 1, 0, 0))

    @classmethod
    def imag(cls, ring: str = DEFAULT_RING) -> "Scalar":
        if ring != "qsi":
            raise RingError(f"i is not an element of ring {ring}")
        return cls(ring, (0, 0, 1, 0))

    # arithmetic

    def _same(self, other: "Scalar") -> None:
        if not isinstance(other, Scalar):
            raise TypeError(f"expected Scalar, got {type(other).__name__}")
        if other.ring != self.ring:
            raise RingError(f"ring mismatch: {self.ring} vs {other.ring}")

    def __add__(self, other: "Scalar") -> "Scalar":
        self._same(other)
        return Scalar(self.ring, (x + y for x, y in zip(self.parts, other.parts)))

    def __sub__(self, other: "Scalar") -> "Scalar":
        return self + (-other)

    def __neg__(self) -> "Scalar":
        return Scalar(self.ring, (-x for x in self.parts))

    def __mul__(self, other: "Scalar") -> "Scalar":
        self._same(other)
        if self.ring != "qsi":
            return Scalar(self.ring, (self.parts[0] * other.parts[0],))
        a1, b1, c1, d1 = self.parts
        a2, b2, c2, d2 = other.parts
        # basis 1, r, j, jr with r*r = 2, j*j = -1
        a = a1 * a2 + 2 * b1 * b2 - c1 * c2 - 2 * d1 * d2
        b = a1 * b2 + b1 * a2 - c1 * d2 - d1 * c2
        c = a1 * c2 + c1 * a2 + 2 * b1 * d2 + 2 * d1 * b2
        d = a1 * d2 + d1 * a2 + b1 * c2 + c1 * b2
        return Scalar("qsi", (a, b, c, d))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scalar):
            return NotImplemented
        return self.ring == other.ring and self.parts == other.parts

    def __hash__(self) -> int:
        return self._hash

    def is_zero(self) -> bool:
        return not any(self.parts)

    def is_one(self) -> bool:
        return self.parts[0] == 1 and not any(self.parts[1:])

    def sort_key(self) -> tuple:
        return (self.ring, tuple(Fraction(p) for p in self.parts))

    # printing

    def monomials(self) -> list[tuple[Fraction, str]]:
        names = ("", "sqrt2", "i", "i*sqrt2") if self.ring == "qsi" else ("",)
        return [(Fraction(c), n) for c, n in zip(self.parts, names) if c != 0]

    def render(self) -> str:
        """Plain rendering, e.g. ``1/2*sqrt2`` or ``1 + i``."""
        mons = self.monomials()
        if not mons:
            return "0"
        out = ""
        for k, (c, name) in enumerate(mons):
            neg = c < 0
            mag = -c if neg else c
            if name and mag == 1:
                body = name
            elif name:
                body = f"{mag}*{name}"
            else:
                body = str(mag)
            if k == 0:
                out = ("-" if neg else "") + body
            else:
                out += (" - " if neg else " + ") + body
        return out

    def render_term(self) -> str:
        """Rendering that the term parser reads back, e.g. ``(1/2)*sqrt2``."""
        mons = self.monomials()
        if not mons:
            return "0"
        pieces = []
        for c, name in mons:
            neg = c < 0
            mag = -c if neg else c
            coef = str(mag) if mag.denominator == 1 else f"({mag})"
            if name and mag == 1:
                body = name
            elif name:
                body = f"{coef}*{name}"
            else:
                body = coef
            pieces.append((neg, body))
        out = ("-" if pieces[0][0] else "") + pieces[0][1]
        for neg, body in pieces[1:]:
            out += (" - " if neg else " + ") + body
        if len(pieces) > 1 or pieces[0][0]:
            out = f"({out})"
        return out

    def __repr__(self) -> str:
        return f"Scalar({self.ring}, {self.render()})"

    def __str__(self) -> str:
        return self.render()


def ring_add(x: Scalar, y: Scalar) -> Scalar:
    return x + y


def ring_mul(x: Scalar, y: Scalar) -> Scalar:
    return x * y


def ring_neg(x: Scalar) -> Scalar:
    return -x


def ring_eq(x: Scalar, y: Scalar) -> bool:
    x._same(y)
    return x == y


def ring_zero(ring: str = DEFAULT_RING) -> Scalar:
    return Scalar.zero(ring)


def ring_one(ring: str = DEFAULT_RING) -> Scalar:
    return Scalar.one(ring)


def half_sqrt2(ring: str = DEFAULT_RING) -> Scalar:
    """The literal 1/sqrt2 = (1/2)*sqrt2."""
    return Scalar(ring, (0, Fraction(1, 2), 0, 0))
