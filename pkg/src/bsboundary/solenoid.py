"""The p-solenoid as a fundamental domain in Aff(p, R) x Q_p.

Points of ``Delta = [0, 1) x Z_p`` stand for orbits of BS(1,p) acting on
``Aff(p, R) x Q_p`` by ``gamma * (g, x) = (g gamma^{-1}, gamma . x)``.
:func:`project` picks the orbit representative: for ``g = (b, p^m)`` it uses
``y = p^m x`` and

    k = floor(b + alpha(y)) - alpha(y),

so that ``b - k`` lies in ``[0, 1)`` and ``y + k`` lies in Z_p.  Real
coordinates are exact fractions, so the half-open interval test is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from bsboundary.affine import (
    AffineElement,
    AffineExact,
    AffineReal,
    act_on_padic,
    compose,
    inverse,
)
from bsboundary.errors import (
    DegenerateBoundary,
    InsufficientPrecision,
    PrimeMismatchError,
)
from bsboundary.measure import StepMeasure
from bsboundary.padic import PAdicRational, TruncatedPAdic, vp
from bsboundary.walk import CertificationPolicy, boundary_batch, sample_boundary_padic

__all__ = [
    "GUARD_DIGITS",
    "ProjectionResult",
    "SolenoidPoint",
    "act",
    "fundamental_domain_solutions",
    "fundamental_domain_uniqueness",
    "nu_tilde_batch",
    "project",
    "sample_nu_tilde",
    "star_invariance_check",
]

GUARD_DIGITS = 2


@dataclass(frozen=True)
class SolenoidPoint:
    """Point ``(x_inf, x_p)`` of ``[0, 1) x Z_p``."""

    x_inf: Fraction
    x_p: TruncatedPAdic

    def __post_init__(self) -> None:
        x_inf = Fraction(self.x_inf)
        if not 0 <= x_inf < 1:
            raise ValueError(f"x_inf={float(x_inf)} outside [0, 1)")
        if not self.x_p.in_Zp():
            raise ValueError("x_p must lie in Z_p")
        object.__setattr__(self, "x_inf", x_inf)

    @classmethod
    def _unchecked(cls, x_inf: Fraction, x_p: TruncatedPAdic) -> SolenoidPoint:
        obj = object.__new__(cls)
        object.__setattr__(obj, "x_inf", x_inf)
        object.__setattr__(obj, "x_p", x_p)
        return obj

    @property
    def p(self) -> int:
        return self.x_p.p

    def agrees_with(self, other: SolenoidPoint) -> bool:
        """Same real coordinate, same p-adic coordinate at common precision."""
        return self.x_inf == other.x_inf and self.x_p.agrees_with(other.x_p)

    def to_json(self) -> dict:
        return {"x_inf": float(self.x_inf), "x_p": str(self.x_p)}


@dataclass(frozen=True)
class ProjectionResult:
    point: SolenoidPoint
    gamma: AffineExact


def project(
    g: AffineElement,
    x: TruncatedPAdic,
    guard: int = GUARD_DIGITS,
    degenerate_tol: float = 0.0,
) -> ProjectionResult:
    """Bring ``(g, x)`` into the fundamental domain.

    Returns the point ``(b - k, p^m x + k)`` and ``gamma = (k, p^m)``, which
    satisfies ``gamma * (g, x) = ((b - k, 1), gamma . x)``.

    ``p^m x`` must carry at least ``guard`` certified non-negative digits.
    With ``degenerate_tol > 0``, inputs where ``b + alpha`` is that close to
    an integer raise :class:`DegenerateBoundary` instead of being resolved
    by the exact half-open convention.
    """
    if g.p != x.p:
        raise PrimeMismatchError(f"primes {g.p} and {x.p} differ")
    g = g.to_real()
    y = x.shift(g.m)
    if y.precision < guard:
        raise InsufficientPrecision(
            f"p^{g.m} x is known to index {y.precision}, need {guard}"
        )
    p = x.p
    b = g.b
    # alpha(y) = a_num / P with P = p^(-v); a_num is a unit when v < 0
    if y.unit != 0 and y.v < 0:
        P = p ** (-y.v)
        a_num = y.unit % P
        y_int = y.unit // P
        e = -y.v
    else:
        P, a_num, e = 1, 0, 0
        y_int = y.unit * p**y.v if y.unit else 0
    bn, bd = b.numerator, b.denominator
    fl = (bn * P + a_num * bd) // (bd * P)
    if degenerate_tol > 0:
        s = b + Fraction(a_num, P)
        if min(s - fl, fl + 1 - s) < degenerate_tol:
            raise DegenerateBoundary(f"b + alpha = {float(s)!r} is near an integer")
    k = PAdicRational._unchecked(p, fl * P - a_num, e)
    x_inf = Fraction(bn * P - (fl * P - a_num) * bd, bd * P)
    x_p = TruncatedPAdic.normalized(p, 0, y_int + fl, y.precision)
    point = SolenoidPoint._unchecked(x_inf, x_p)
    return ProjectionResult(point, AffineExact(k, g.m))


def star_invariance_check(g: AffineElement, x: TruncatedPAdic, gamma: AffineExact) -> bool:
    """``project(g gamma^{-1}, gamma . x)`` names the same point as ``project(g, x)``.

    The returned group elements must also match: the first composed with
    ``gamma`` equals the second.
    """
    moved = project(compose(g, inverse(gamma)), act_on_padic(gamma, x))
    base = project(g, x)
    return moved.point.agrees_with(base.point) and compose(moved.gamma, gamma) == base.gamma


def act(g0: AffineElement, s: SolenoidPoint) -> SolenoidPoint:
    """Action of Aff(p, R) on the solenoid."""
    lifted = compose(g0.to_real(), AffineReal(s.x_inf, 0, s.p))
    return project(lifted, s.x_p).point


def sample_nu_tilde(
    mu: StepMeasure,
    precision: int = 8,
    seed: int = 0,
    policy: CertificationPolicy | None = None,
) -> SolenoidPoint:
    """Draw from the stationary measure on the solenoid: ``(alpha(x), x - alpha(x))``."""
    x = sample_boundary_padic(mu, precision, seed, policy).value
    return project(AffineReal.identity(mu.p), x).point


def nu_tilde_batch(mu: StepMeasure, n: int, seed: int, precision: int = 8) -> list[SolenoidPoint]:
    e = AffineReal.identity(mu.p)
    return [project(e, s.value).point for s in boundary_batch(mu, n, seed, precision)]


@lru_cache(maxsize=16)
def _translation_grid(p: int, bound: int, max_e: int) -> tuple[PAdicRational, ...]:
    seen = set()
    for e in range(max_e + 1):
        for j in range(-bound, bound + 1):
            seen.add(PAdicRational(p, j, e))
    return tuple(sorted(seen, key=lambda k: k.to_fraction()))


def fundamental_domain_solutions(
    g: AffineElement,
    x: PAdicRational,
    search_bound: int = 64,
    max_e: int = 6,
    m_radius: int = 1,
) -> list[AffineExact]:
    """Every ``gamma = (j/p^e, p^m')`` with ``gamma * (g, x)`` in the domain.

    Brute force over ``|j| <= search_bound``, ``0 <= e <= max_e`` and
    ``|m' - m| <= m_radius``; independent of :func:`project`.
    """
    g = g.to_real()
    p = g.p
    found = []
    for m2 in range(g.m - m_radius, g.m + m_radius + 1):
        if m2 != g.m:
            # a(g gamma^{-1}) = p^(m - m2) is not 1
            continue
        px = x.mul_by_power(m2)
        for k in _translation_grid(p, search_bound, max_e):
            if 0 <= g.b - k.to_fraction() < 1 and vp(px + k) >= 0:
                found.append(AffineExact(k, m2))
    return found


def fundamental_domain_uniqueness(
    g: AffineElement,
    x: PAdicRational,
    search_bound: int = 64,
    max_e: int = 6,
) -> int:
    """Number of group elements mapping ``(g, x)`` into the domain (expected: 1)."""
    return len(fundamental_domain_solutions(g, x, search_bound, max_e))
