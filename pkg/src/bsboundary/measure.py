"""Finitely supported step measures, drifts and the boundary spectrum.

Drifts are returned as ``coeff * log(base)`` with an exact rational
coefficient; every sign decision is made on exact data, never on the float
rendering.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from bsboundary.affine import AffineExact
from bsboundary.errors import ConfigError, InvalidMeasure
from bsboundary.padic import check_prime

__all__ = [
    "Drift",
    "RationalStepMeasure",
    "StepMeasure",
    "ValidationReport",
    "boundary_drifts",
    "boundary_spectrum",
    "drift_inf",
    "drift_p",
    "format_measure",
    "load_measure",
    "mu_star",
    "parse_measure",
    "validate",
]


def _weights_ok(weights: Sequence[Fraction]) -> None:
    for w in weights:
        if w <= 0:
            raise InvalidMeasure(f"weights must be positive, got {w}")
    total = sum(weights, Fraction(0))
    if total != 1:
        raise InvalidMeasure(f"weights must sum to exactly 1, got {total}")


@dataclass(frozen=True)
class StepMeasure:
    """Finitely supported probability measure on BS(1,p).

    Weights are exact rationals summing to one.  Atoms with equal group
    element are kept separate; they behave like a single atom with the
    summed weight.
    """

    p: int
    atoms: tuple[tuple[AffineExact, Fraction], ...]
    _cdf: np.ndarray = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        check_prime(self.p)
        atoms = tuple((g, Fraction(w)) for g, w in self.atoms)
        if not atoms:
            raise InvalidMeasure("a step measure needs at least one atom")
        for g, _ in atoms:
            if not isinstance(g, AffineExact):
                raise InvalidMeasure(f"atom {g!r} is not an exact BS(1,p) element")
            if g.p != self.p:
                raise InvalidMeasure(f"atom {g} is over prime {g.p}, expected {self.p}")
        _weights_ok([w for _, w in atoms])
        object.__setattr__(self, "atoms", atoms)
        cdf = np.cumsum([float(w) for _, w in atoms])
        cdf[-1] = 1.0
        object.__setattr__(self, "_cdf", cdf)

    @classmethod
    def from_triples(cls, p: int, triples: Iterable[tuple[object, int, object]]) -> StepMeasure:
        """Build from ``(b, m, weight)`` triples; ``b`` and weights may be text."""
        atoms = []
        for b, m, w in triples:
            atoms.append((AffineExact.make(b, m, p), Fraction(w)))
        return cls(p, tuple(atoms))

    @property
    def weights(self) -> list[Fraction]:
        return [w for _, w in self.atoms]

    @property
    def elements(self) -> list[AffineExact]:
        return [g for g, _ in self.atoms]

    @property
    def cdf(self) -> np.ndarray:
        return self._cdf

    def mean_exponent(self) -> Fraction:
        """Exact ``sum w_i m_i``."""
        return sum((w * g.m for g, w in self.atoms), Fraction(0))

    def min_translation_valuation(self) -> int | None:
        """Smallest ``vp(b)`` over atoms with ``b != 0`` (None if all zero)."""
        from bsboundary.padic import vp

        vals = [vp(g.b) for g, _ in self.atoms if not g.b.is_zero()]
        return min(vals) if vals else None

    def mixture(self, other: StepMeasure, alpha: Fraction) -> StepMeasure:
        """``alpha * self + (1 - alpha) * other``."""
        alpha = Fraction(alpha)
        if other.p != self.p:
            raise InvalidMeasure("cannot mix measures over different primes")
        atoms = [(g, alpha * w) for g, w in self.atoms]
        atoms += [(g, (1 - alpha) * w) for g, w in other.atoms]
        return StepMeasure(self.p, tuple((g, w) for g, w in atoms if w != 0))

    def to_rational(self) -> RationalStepMeasure:
        return RationalStepMeasure(
            tuple(((g.b.to_fraction(), g.a), w) for g, w in self.atoms)
        )


@dataclass(frozen=True)
class RationalStepMeasure:
    """Finitely supported measure on Aff(Q): atoms ``((b, a), weight)``."""

    atoms: tuple[tuple[tuple[Fraction, Fraction], Fraction], ...]

    def __post_init__(self) -> None:
        atoms = tuple(
            ((Fraction(b), Fraction(a)), Fraction(w)) for (b, a), w in self.atoms
        )
        if not atoms:
            raise InvalidMeasure("a step measure needs at least one atom")
        for (_, a), _w in atoms:
            if a <= 0:
                raise InvalidMeasure(f"dilations must be positive, got {a}")
        _weights_ok([w for _, w in atoms])
        object.__setattr__(self, "atoms", atoms)


@dataclass(frozen=True)
class Drift:
    """Drift at one place, equal to ``exact_coeff * log(base)``."""

    place: str
    exact_coeff: Fraction
    base: Fraction

    @property
    def float_value(self) -> float:
        if self.exact_coeff == 0:
            return 0.0
        return float(self.exact_coeff) * math.log(self.base)

    @property
    def sign(self) -> int:
        """Exact sign; ``base >= 1`` always holds."""
        if self.exact_coeff == 0 or self.base == 1:
            return 0
        return 1 if self.exact_coeff > 0 else -1

    def as_dict(self) -> dict:
        return {
            "place": self.place,
            "exact_coeff": str(self.exact_coeff),
            "base": str(self.base),
            "float_value": self.float_value,
        }


def drift_p(mu: StepMeasure) -> Drift:
    """``E log|a|_p = -(sum w_i m_i) log p``."""
    return Drift(str(mu.p), -mu.mean_exponent(), Fraction(mu.p))


def drift_inf(mu: StepMeasure) -> Drift:
    """``E log a = (sum w_i m_i) log p``; always the negative of :func:`drift_p`."""
    return Drift("inf", mu.mean_exponent(), Fraction(mu.p))


def _factor(n: int) -> dict[int, int]:
    from sympy import factorint

    return {int(q): int(e) for q, e in factorint(n).items()} if n > 1 else {}


def _valuations(a: Fraction) -> dict[int, int]:
    out = dict(_factor(a.numerator))
    for q, e in _factor(a.denominator).items():
        out[q] = out.get(q, 0) - e
    return out


def _archimedean(exponents: dict[int, Fraction]) -> Drift:
    """Write ``sum_q c_q log q`` as ``coeff * log(base)`` with ``base >= 1``."""
    exponents = {q: c for q, c in exponents.items() if c != 0}
    if not exponents:
        return Drift("inf", Fraction(0), Fraction(1))
    den = math.lcm(*(c.denominator for c in exponents.values()))
    ints = {q: int(c * den) for q, c in exponents.items()}
    g = math.gcd(*ints.values())
    base = Fraction(1)
    for q, k in ints.items():
        base *= Fraction(q) ** (k // g)
    coeff = Fraction(g, den)
    if base < 1:
        base, coeff = 1 / base, -coeff
    return Drift("inf", coeff, base)


def boundary_drifts(mu: RationalStepMeasure | StepMeasure) -> list[Drift]:
    """Drift at every prime dividing some dilation, then at infinity.

    The prime drifts are ``E log|a|_q = -E[v_q(a)] log q``; the real drift is
    ``E log a = sum_q E[v_q(a)] log q``.
    """
    if isinstance(mu, StepMeasure):
        mu = mu.to_rational()
    mean_val: dict[int, Fraction] = {}
    for (_, a), w in mu.atoms:
        for q, e in _valuations(a).items():
            mean_val[q] = mean_val.get(q, Fraction(0)) + w * e
    drifts = [Drift(str(q), -mean_val[q], Fraction(q)) for q in sorted(mean_val)]
    drifts.append(_archimedean(mean_val))
    return drifts


def boundary_spectrum(mu: RationalStepMeasure | StepMeasure) -> list[Drift]:
    """Places with strictly negative drift: the predicted boundary factors."""
    return [d for d in boundary_drifts(mu) if d.sign < 0]


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    irreducible: bool
    regime: str
    drift_p: Drift
    drift_inf: Drift
    notes: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "valid": self.valid,
            "irreducible": self.irreducible,
            "regime": self.regime,
            "drift_p": self.drift_p.as_dict(),
            "drift_inf": self.drift_inf.as_dict(),
            "notes": list(self.notes),
        }


def validate(mu: StepMeasure | Sequence, p: int | None = None) -> ValidationReport:
    """Check a measure (or raw ``(b, m, w)`` triples) and classify its regime.

    Raises :class:`InvalidMeasure` on bad weights.  ``irreducible`` uses the
    sufficient test "some atom has m > 0 and some atom has m < 0".
    """
    if not isinstance(mu, StepMeasure):
        if p is None:
            raise InvalidMeasure("a prime is needed to validate raw atoms")
        mu = StepMeasure.from_triples(p, mu)
    ms = [g.m for g in mu.elements]
    irreducible = any(m > 0 for m in ms) and any(m < 0 for m in ms)
    dp, di = drift_p(mu), drift_inf(mu)
    if dp.sign < 0:
        regime = "contracting-on-Q_p"
    elif di.sign < 0:
        regime = "contracting-on-R"
    else:
        regime = "zero-drift"
    notes = []
    if not irreducible:
        notes.append("support lacks both expanding and contracting atoms")
    if regime != "contracting-on-Q_p":
        notes.append("solenoid boundary needs drift_p < 0")
    return ValidationReport(True, irreducible, regime, dp, di, tuple(notes))


def mu_star(p: int = 2) -> StepMeasure:
    """Reference measure: ``(0,p), (1,p)`` w.p. 1/3 each, ``(0,1/p), (1,1/p)`` w.p. 1/6."""
    return StepMeasure.from_triples(
        p,
        [
            (0, 1, Fraction(1, 3)),
            (1, 1, Fraction(1, 3)),
            (0, -1, Fraction(1, 6)),
            (1, -1, Fraction(1, 6)),
        ],
    )


# ----------------------------------------------------------------------
# plain-text configuration
# ----------------------------------------------------------------------


def _kv(tokens: list[str], lineno: int) -> dict[str, str]:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ConfigError(f"line {lineno}: expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def parse_measure(text: str) -> tuple[StepMeasure | RationalStepMeasure, dict[str, str]]:
    """Parse the measure format; returns the measure and any extra settings.

    Recognized lines (``#`` starts a comment)::

        prime 2
        atom b=1/2^0 m=1 w=1/3       # BS(1,p) atom
        atom b=1 a=3/2 w=2/3         # rational affine atom (no prime line)
        seed 7                       # any other ``key value`` is kept as a setting
    """
    p = None
    exact: list[tuple[str, int, Fraction]] = []
    rational: list[tuple[tuple[Fraction, Fraction], Fraction]] = []
    settings: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            if head in ("prime", "p"):
                p = int(rest[0])
            elif head == "atom":
                kv = _kv(rest, lineno)
                w = Fraction(kv["w"])
                if "m" in kv:
                    exact.append((kv.get("b", "0"), int(kv["m"]), w))
                elif "a" in kv:
                    b = kv.get("b", "0")
                    if "^" in b:
                        num, pe = b.split("/")
                        base, e = pe.split("^")
                        b_frac = Fraction(int(num), int(base) ** int(e))
                    else:
                        b_frac = Fraction(b)
                    rational.append(((b_frac, Fraction(kv["a"])), w))
                else:
                    raise ConfigError(f"line {lineno}: atom needs m= or a=")
            else:
                settings[head] = " ".join(rest)
        except (KeyError, IndexError, ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: {exc}") from exc
    if exact and rational:
        raise ConfigError("cannot mix m= and a= atoms")
    if exact:
        if p is None:
            raise ConfigError("BS(1,p) atoms need a 'prime' line")
        try:
            return StepMeasure.from_triples(p, exact), settings
        except ValueError as exc:
            if isinstance(exc, InvalidMeasure):
                raise
            raise ConfigError(str(exc)) from exc
    if rational:
        return RationalStepMeasure(tuple(rational)), settings
    raise ConfigError("no atoms found")


def load_measure(path: str | Path):
    return parse_measure(Path(path).read_text(encoding="utf-8"))


def format_measure(mu: StepMeasure) -> str:
    lines = [f"prime {mu.p}"]
    for g, w in mu.atoms:
        lines.append(f"atom b={g.b} m={g.m} w={w}")
    return "\n".join(lines) + "\n"
