"""Elements of BS(1,p) and of its closure Aff(p, R).

An element ``(b, p**m)`` is the affine map ``t -> p**m * t + b``, i.e. the
matrix ``[[p**m, b], [0, 1]]``.  The dilation is always stored through its
integer exponent ``m``.

:class:`AffineExact` carries an exact ``b`` in Z[1/p].  :class:`AffineReal`
carries a real ``b``; it is stored as a :class:`fractions.Fraction` so that
a float input is kept at its exact binary value and every later composition,
floor and comparison is exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

from bsboundary.errors import PrimeMismatchError
from bsboundary.padic import PAdicRational, TruncatedPAdic, add_rational, check_prime

__all__ = [
    "AffineElement",
    "AffineExact",
    "AffineReal",
    "act_on_padic",
    "act_on_real",
    "compose",
    "from_json",
    "inverse",
    "to_json",
]


@dataclass(frozen=True)
class AffineExact:
    """Element of BS(1,p) = Z[1/p] ⋊ Z."""

    b: PAdicRational
    m: int = 0

    @classmethod
    def make(cls, b, m: int, p: int) -> AffineExact:
        return cls(PAdicRational.coerce(b, p), int(m))

    @classmethod
    def identity(cls, p: int) -> AffineExact:
        return cls(PAdicRational(p, 0), 0)

    @property
    def p(self) -> int:
        return self.b.p

    @property
    def a(self) -> Fraction:
        return Fraction(self.p) ** self.m

    def is_identity(self) -> bool:
        return self.m == 0 and self.b.is_zero()

    def to_real(self) -> AffineReal:
        return AffineReal(self.b.to_fraction(), self.m, self.p)

    def __mul__(self, other: AffineElement) -> AffineElement:
        return compose(self, other)

    def __str__(self) -> str:
        return f"({self.b}, {self.p}^{self.m})"


@dataclass(frozen=True)
class AffineReal:
    """Element of Aff(p, R) = R ⋊ Z with an exactly stored translation."""

    b: Fraction
    m: int
    p: int

    def __post_init__(self) -> None:
        check_prime(self.p)
        b = self.b
        if isinstance(b, PAdicRational):
            b = b.to_fraction()
        elif isinstance(b, float):
            if not math.isfinite(b):
                raise ValueError(f"translation must be finite, got {b}")
            b = Fraction(b)
        elif isinstance(b, (str, Real)):
            b = Fraction(b)
        else:
            raise TypeError(f"cannot use {type(b).__name__} as a translation")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "m", int(self.m))

    @classmethod
    def identity(cls, p: int) -> AffineReal:
        return cls(Fraction(0), 0, p)

    @property
    def a(self) -> Fraction:
        return Fraction(self.p) ** self.m

    def is_identity(self) -> bool:
        return self.m == 0 and self.b == 0

    def to_real(self) -> AffineReal:
        return self

    def __mul__(self, other: AffineElement) -> AffineElement:
        return compose(self, other)

    def __str__(self) -> str:
        return f"({float(self.b)!r}, {self.p}^{self.m})"


AffineElement = AffineExact | AffineReal


def _prime(g: AffineElement) -> int:
    return g.p


def compose(g: AffineElement, h: AffineElement) -> AffineElement:
    """Matrix product ``g h``: ``(b, p^m)(b', p^m') = (b + p^m b', p^(m+m'))``."""
    if _prime(g) != _prime(h):
        raise PrimeMismatchError(f"primes {g.p} and {h.p} differ")
    if isinstance(g, AffineExact) and isinstance(h, AffineExact):
        return AffineExact(g.b + h.b.mul_by_power(g.m), g.m + h.m)
    g, h = g.to_real(), h.to_real()
    return AffineReal(g.b + g.a * h.b, g.m + h.m, g.p)


def inverse(g: AffineElement) -> AffineElement:
    """``(b, p^m)^{-1} = (-p^{-m} b, p^{-m})``."""
    if isinstance(g, AffineExact):
        return AffineExact(-g.b.mul_by_power(-g.m), -g.m)
    return AffineReal(-g.b / g.a, -g.m, g.p)


def act_on_real(g: AffineElement, t):
    """``p**m * t + b``; floats in, float out (rounded once)."""
    g = g.to_real()
    if isinstance(t, float):
        return float(g.a * Fraction(t) + g.b)
    return g.a * Fraction(t) + g.b


def act_on_padic(gamma: AffineExact, x: TruncatedPAdic) -> TruncatedPAdic:
    """``gamma . x = p**m x + b`` in Q_p; precision shifts by ``m``."""
    if gamma.p != x.p:
        raise PrimeMismatchError(f"primes {gamma.p} and {x.p} differ")
    return add_rational(x.shift(gamma.m), gamma.b)


def _real_to_json(b: Fraction):
    f = float(b)
    if Fraction(f) == b:
        return f
    return f"{b.numerator}/{b.denominator}"


def to_json(g: AffineElement) -> str:
    """Serialize as the JSON pair ``[b, m]``; exact ``b`` in ``n/p^e`` form."""
    if isinstance(g, AffineExact):
        return json.dumps([str(g.b), g.m])
    return json.dumps([_real_to_json(g.b), g.m])


def from_json(text: str, p: int) -> AffineElement:
    """Inverse of :func:`to_json`; strings containing ``^`` are exact."""
    b, m = json.loads(text)
    if isinstance(b, str) and "^" in b:
        return AffineExact(PAdicRational.parse(b, p), int(m))
    return AffineReal(Fraction(b) if isinstance(b, str) else b, int(m), p)
