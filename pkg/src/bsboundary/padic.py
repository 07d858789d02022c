"""Exact arithmetic on Z[1/p] and finite-precision arithmetic on Q_p.

Two value types live here:

* :class:`PAdicRational` is an exact element ``n / p**e`` of the ring Z[1/p].
  These are the translation parts of Baumslag-Solitar group elements.
* :class:`TruncatedPAdic` is an element of Q_p known modulo ``p**N``.  It
  stores the valuation ``v`` and a unit residue, so digits ``d_v .. d_{N-1}``
  are all certified.  Negative numbers use the usual complement digits.

Both are immutable and hashable.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cache
from typing import Union

from bsboundary.errors import PrecisionError, PrimeMismatchError

__all__ = [
    "PAdicRational",
    "TruncatedPAdic",
    "add_rational",
    "check_prime",
    "frac_part_alpha",
    "int_valuation",
    "padic_norm",
    "shift",
    "truncate",
    "vp",
]

RationalLike = Union["PAdicRational", int, Fraction, str]


@cache
def check_prime(p: int) -> int:
    """Return ``p`` if it is prime, raise ``ValueError`` otherwise."""
    if not isinstance(p, int) or isinstance(p, bool) or p < 2:
        raise ValueError(f"prime must be an integer >= 2, got {p!r}")
    if p < 4:
        return p
    if p % 2 == 0:
        raise ValueError(f"{p} is not prime")
    for d in range(3, math.isqrt(p) + 1, 2):
        if p % d == 0:
            raise ValueError(f"{p} is not prime")
    return p


def int_valuation(n: int, p: int) -> int:
    """Exponent of ``p`` in the nonzero integer ``n``."""
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*(?:\^\s*(\d+))?)?\s*$")


@dataclass(frozen=True, eq=False)
class PAdicRational:
    """Exact element ``n / p**e`` of Z[1/p], kept in canonical form.

    Canonical form means ``e == 0`` or ``p`` does not divide ``n``; zero is
    stored as ``n = 0, e = 0``.  Construction canonicalizes silently.
    """

    p: int
    n: int
    e: int = 0

    def __post_init__(self) -> None:
        check_prime(self.p)
        if self.e < 0:
            # allow negative exponents on input, fold them into n
            object.__setattr__(self, "n", self.n * self.p ** (-self.e))
            object.__setattr__(self, "e", 0)
        n, e = self.n, self.e
        if n == 0:
            e = 0
        else:
            while e > 0 and n % self.p == 0:
                n //= self.p
                e -= 1
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "e", e)

    # -- construction -------------------------------------------------
    @classmethod
    def _unchecked(cls, p: int, n: int, e: int) -> PAdicRational:
        # caller guarantees canonical form
        obj = object.__new__(cls)
        object.__setattr__(obj, "p", p)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "e", e)
        return obj

    @classmethod
    def coerce(cls, value: RationalLike, p: int) -> PAdicRational:
        """Build from an int, a Fraction with p-power denominator, or text."""
        if isinstance(value, PAdicRational):
            if value.p != p:
                raise PrimeMismatchError(f"expected prime {p}, got {value.p}")
            return value
        if isinstance(value, bool):
            raise TypeError("booleans are not rationals")
        if isinstance(value, int):
            return cls(p, value, 0)
        if isinstance(value, str):
            return cls.parse(value, p)
        if isinstance(value, Fraction):
            den = value.denominator
            e = 0
            while den % p == 0:
                den //= p
                e += 1
            if den != 1:
                raise ValueError(f"{value} is not in Z[1/{p}]")
            return cls(p, value.numerator, e)
        raise TypeError(f"cannot coerce {type(value).__name__} to PAdicRational")

    @classmethod
    def parse(cls, text: str, p: int) -> PAdicRational:
        """Parse ``n``, ``n/d`` or ``n/p^e``."""
        m = _RATIONAL_RE.match(text)
        if m is None:
            raise ValueError(f"cannot parse rational {text!r}")
        num = int(m.group(1))
        if m.group(2) is None:
            return cls(p, num, 0)
        base = int(m.group(2))
        if m.group(3) is not None:
            if base != p:
                raise PrimeMismatchError(f"{text!r} uses base {base}, expected {p}")
            return cls(p, num, int(m.group(3)))
        return cls.coerce(Fraction(num, base), p)

    # -- basic queries ------------------------------------------------
    def is_zero(self) -> bool:
        return self.n == 0

    def to_fraction(self) -> Fraction:
        return Fraction(self.n, self.p**self.e)

    def __float__(self) -> float:
        return float(self.to_fraction())

    def __str__(self) -> str:
        return f"{self.n}/{self.p}^{self.e}"

    def __repr__(self) -> str:
        return f"PAdicRational(p={self.p}, {self.n}/{self.p}^{self.e})"

    # -- ring structure -----------------------------------------------
    def _same_prime(self, other: RationalLike) -> PAdicRational:
        return PAdicRational.coerce(other, self.p)

    def __add__(self, other: RationalLike) -> PAdicRational:
        o = self._same_prime(other)
        e = max(self.e, o.e)
        n = self.n * self.p ** (e - self.e) + o.n * self.p ** (e - o.e)
        return PAdicRational(self.p, n, e)

    __radd__ = __add__

    def __neg__(self) -> PAdicRational:
        return PAdicRational(self.p, -self.n, self.e)

    def __sub__(self, other: RationalLike) -> PAdicRational:
        return self + (-self._same_prime(other))

    def __rsub__(self, other: RationalLike) -> PAdicRational:
        return self._same_prime(other) - self

    def __mul__(self, other: RationalLike) -> PAdicRational:
        o = self._same_prime(other)
        return PAdicRational(self.p, self.n * o.n, self.e + o.e)

    __rmul__ = __mul__

    def mul_by_power(self, m: int) -> PAdicRational:
        """Multiply by ``p**m`` (``m`` may be negative)."""
        if m >= 0:
            return PAdicRational(self.p, self.n * self.p**m, self.e)
        return PAdicRational(self.p, self.n, self.e - m)

    # -- comparisons --------------------------------------------------
    def __eq__(self, other: object) -> bool:
        if isinstance(other, PAdicRational):
            return self.p == other.p and self.n == other.n and self.e == other.e
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.to_fraction() == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.p, self.n, self.e))

    def __lt__(self, other: RationalLike) -> bool:
        return self.to_fraction() < _as_fraction(other)

    def __le__(self, other: RationalLike) -> bool:
        return self.to_fraction() <= _as_fraction(other)

    def __gt__(self, other: RationalLike) -> bool:
        return self.to_fraction() > _as_fraction(other)

    def __ge__(self, other: RationalLike) -> bool:
        return self.to_fraction() >= _as_fraction(other)


def _as_fraction(x: RationalLike) -> Fraction:
    if isinstance(x, PAdicRational):
        return x.to_fraction()
    return Fraction(x)


def vp(x: PAdicRational) -> float | int:
    """p-adic valuation of ``x``; ``math.inf`` for zero."""
    if x.n == 0:
        return math.inf
    if x.e > 0:
        return -x.e
    return int_valuation(x.n, x.p)


def padic_norm(x: PAdicRational) -> Fraction:
    """Exact ultrametric norm ``p**(-vp(x))``."""
    v = vp(x)
    if v == math.inf:
        return Fraction(0)
    return Fraction(x.p) ** (-v)


def frac_part_alpha(x: PAdicRational) -> PAdicRational:
    """Representative of ``x`` modulo Z_p lying in ``[0, 1)``.

    The result differs from ``x`` by a p-adic integer and is the unique such
    element of Z[1/p] inside ``[0, 1)``.  Integers map to 0.
    """
    scale = x.p**x.e
    return PAdicRational(x.p, x.n % scale, x.e)


# ----------------------------------------------------------------------
# truncated p-adics
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class TruncatedPAdic:
    """Element of Q_p known modulo ``p**precision``.

    ``unit`` is an integer in ``[0, p**(precision - v))`` not divisible by
    ``p``, so ``x = unit * p**v (mod p**precision)`` and ``v`` is the exact
    valuation.  The zero class is stored with ``v == precision`` and
    ``unit == 0``: all that is known is ``vp(x) >= precision``.
    """

    p: int
    v: int
    unit: int
    precision: int

    def __post_init__(self) -> None:
        check_prime(self.p)
        if self.unit == 0:
            if self.v != self.precision:
                raise ValueError("zero must be stored with v == precision")
            return
        if self.precision <= self.v:
            raise ValueError("precision window is empty")
        if self.unit % self.p == 0 or not 0 < self.unit < self.p ** (self.precision - self.v):
            raise ValueError("unit residue is not normalized")

    # -- construction -------------------------------------------------
    @classmethod
    def normalized(cls, p: int, low: int, value: int, precision: int) -> TruncatedPAdic:
        """Class of ``value * p**low`` modulo ``p**precision``."""
        if low >= precision:
            return cls._unchecked(p, precision, 0, precision)
        value %= p ** (precision - low)
        if value == 0:
            return cls._unchecked(p, precision, 0, precision)
        while value % p == 0:
            value //= p
            low += 1
        return cls._unchecked(p, low, value, precision)

    @classmethod
    def _unchecked(cls, p: int, v: int, unit: int, precision: int) -> TruncatedPAdic:
        # caller guarantees the normalization invariants
        obj = object.__new__(cls)
        object.__setattr__(obj, "p", p)
        object.__setattr__(obj, "v", v)
        object.__setattr__(obj, "unit", unit)
        object.__setattr__(obj, "precision", precision)
        return obj

    @classmethod
    def zero(cls, p: int, precision: int) -> TruncatedPAdic:
        return cls(p, precision, 0, precision)

    @classmethod
    def from_digits(cls, p: int, v: int, digits: list[int] | tuple[int, ...]) -> TruncatedPAdic:
        """Build from little-endian digits ``d_v, d_{v+1}, ...``."""
        value = 0
        for d in reversed(digits):
            if not 0 <= d < p:
                raise ValueError(f"digit {d} outside [0, {p})")
            value = value * p + d
        return cls.normalized(p, v, value, v + len(digits))

    @classmethod
    def parse(cls, text: str) -> TruncatedPAdic:
        """Inverse of :meth:`__str__`."""
        m = re.match(r"^\s*p=(\d+)\s+v=(-?\d+)\s+digits=([\d,]*)\s*$", text)
        if m is None:
            raise ValueError(f"cannot parse digit string {text!r}")
        p, v = int(m.group(1)), int(m.group(2))
        digits = [int(d) for d in m.group(3).split(",") if d != ""]
        if not digits:
            return cls.zero(p, v)
        return cls.from_digits(p, v, digits)

    # -- queries ------------------------------------------------------
    def is_zero(self) -> bool:
        return self.unit == 0

    @property
    def valuation(self) -> float | int:
        """Exact valuation, or ``math.inf`` for the zero class."""
        return math.inf if self.unit == 0 else self.v

    @property
    def digits(self) -> list[int]:
        """Digits ``d_v .. d_{precision-1}`` (empty for the zero class)."""
        out = []
        u = self.unit
        for _ in range(self.precision - self.v):
            u, d = divmod(u, self.p)
            out.append(d)
        return out

    def digit(self, i: int) -> int:
        """Digit at index ``i``; raises if ``i`` is not certified."""
        if i >= self.precision:
            raise PrecisionError(f"digit {i} requested at precision {self.precision}")
        if i < self.v:
            return 0
        return (self.unit // self.p ** (i - self.v)) % self.p

    def valuation_at_least(self, t: int) -> bool:
        """Decide ``vp(x) >= t``; needs ``t <= precision`` for the zero class."""
        if self.unit == 0:
            if t > self.precision:
                raise PrecisionError(f"cannot decide vp >= {t} at precision {self.precision}")
            return True
        return self.v >= t

    def in_Zp(self) -> bool:
        return self.valuation_at_least(0)

    def to_rational(self) -> PAdicRational:
        """Representative ``sum d_i p**i`` as an exact non-negative rational."""
        if self.unit == 0:
            return PAdicRational(self.p, 0)
        if self.v >= 0:
            return PAdicRational(self.p, self.unit * self.p**self.v, 0)
        return PAdicRational(self.p, self.unit, -self.v)

    def reduce(self, precision: int) -> TruncatedPAdic:
        """Forget digits at indices ``>= precision``."""
        if precision > self.precision:
            raise PrecisionError("cannot raise precision")
        return TruncatedPAdic.normalized(self.p, self.v, self.unit, precision)

    def alpha(self) -> PAdicRational:
        """Fractional part in ``[0, 1)``; needs every digit below index 0."""
        if self.precision < 0:
            raise PrecisionError("fractional part needs precision >= 0")
        if self.unit == 0 or self.v >= 0:
            return PAdicRational(self.p, 0)
        return PAdicRational(self.p, self.unit % self.p ** (-self.v), -self.v)

    # -- arithmetic ---------------------------------------------------
    def _check(self, other: TruncatedPAdic) -> None:
        if other.p != self.p:
            raise PrimeMismatchError(f"primes {self.p} and {other.p} differ")

    def __add__(self, other: TruncatedPAdic) -> TruncatedPAdic:
        if isinstance(other, PAdicRational):
            return add_rational(self, other)
        self._check(other)
        precision = min(self.precision, other.precision)
        low = min(self.v, other.v)
        value = self.unit * self.p ** (self.v - low) + other.unit * self.p ** (other.v - low)
        return TruncatedPAdic.normalized(self.p, low, value, precision)

    def __neg__(self) -> TruncatedPAdic:
        return TruncatedPAdic.normalized(self.p, self.v, -self.unit, self.precision)

    def __sub__(self, other: TruncatedPAdic) -> TruncatedPAdic:
        if isinstance(other, PAdicRational):
            return add_rational(self, -other)
        return self + (-other)

    def shift(self, m: int) -> TruncatedPAdic:
        """Multiply by ``p**m``; the precision moves with the digits."""
        if self.unit == 0:
            return TruncatedPAdic._unchecked(self.p, self.precision + m, 0, self.precision + m)
        return TruncatedPAdic._unchecked(self.p, self.v + m, self.unit, self.precision + m)

    def agrees_with(self, other: TruncatedPAdic, precision: int | None = None) -> bool:
        """Equality modulo ``p**precision`` (default: the common precision)."""
        self._check(other)
        common = min(self.precision, other.precision)
        if precision is None:
            precision = common
        elif precision > common:
            raise PrecisionError(f"cannot compare at precision {precision} > {common}")
        return (self - other).valuation_at_least(precision)

    def __str__(self) -> str:
        return f"p={self.p} v={self.v} digits={','.join(map(str, self.digits))}"


def truncate(x: PAdicRational, N: int) -> TruncatedPAdic:
    """Embed ``x`` into Q_p and keep digits below index ``N``."""
    if x.n == 0:
        return TruncatedPAdic.zero(x.p, N)
    v = vp(x)
    if N <= v:
        raise PrecisionError(f"precision {N} does not exceed valuation {v}")
    unit = x.n // x.p ** (v + x.e)
    return TruncatedPAdic.normalized(x.p, v, unit, N)


def shift(x: TruncatedPAdic, m: int) -> TruncatedPAdic:
    return x.shift(m)


def add_rational(x: TruncatedPAdic, k: PAdicRational) -> TruncatedPAdic:
    """``x + k`` with the precision of ``x``."""
    if k.p != x.p:
        raise PrimeMismatchError(f"primes {x.p} and {k.p} differ")
    if k.n == 0 or vp(k) >= x.precision:
        return x
    return x + truncate(k, x.precision)
