"""Monte Carlo Poisson transform on the solenoid and the checks built on it.

A bounded observable ``phi`` on ``[0, 1) x Z_p`` extends to ``Aff(p, R) x Q_p``
by ``phi(g, x) = phi(project(g, x).point)``, and

    f(g) = E_nu[ phi(project(g, x)) ]

is a bounded harmonic function.  All estimators here share boundary samples
across the group elements they compare (common random numbers), which makes
several identities hold sample by sample.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from bsboundary.affine import (
    AffineElement,
    AffineExact,
    AffineReal,
    act_on_padic,
    compose,
)
from bsboundary.errors import DegenerateBoundary
from bsboundary.measure import StepMeasure
from bsboundary.padic import TruncatedPAdic
from bsboundary.solenoid import SolenoidPoint, project
from bsboundary.walk import (
    DEFAULT_RISK,
    boundary_batch,
    derive_seed,
    estimate_cylinder_mass,
    sample_boundary_padic,
    step_stream,
)

__all__ = [
    "BoundaryObservable",
    "ConstantObservable",
    "CylinderObservable",
    "HarmonicEstimate",
    "HarmonicityReport",
    "ProbeReport",
    "at_most_one_beta",
    "check_harmonicity",
    "in_periodic_window",
    "martingale_limit_probe",
    "phi_star",
    "poisson_transform",
    "poisson_transform_many",
    "worked_example_table",
]


class BoundaryObservable:
    """Bounded function on the solenoid."""

    sup_norm: float = 1.0

    def __call__(self, s: SolenoidPoint) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def on_pair(self, g: AffineElement, x: TruncatedPAdic, degenerate_tol: float = 0.0) -> float:
        """Value of the invariant extension at ``(g, x)``."""
        return self(project(g, x, degenerate_tol=degenerate_tol).point)


@dataclass(frozen=True)
class ConstantObservable(BoundaryObservable):
    value: float = 1.0

    @property
    def sup_norm(self) -> float:
        return abs(self.value)

    def __call__(self, s: SolenoidPoint) -> float:
        return self.value

    def on_pair(self, g, x, degenerate_tol: float = 0.0) -> float:
        return self.value


@dataclass(frozen=True)
class CylinderObservable(BoundaryObservable):
    """``1{digits of x_p from index start equal pattern} * 1{lo <= x_inf < hi}``."""

    pattern: tuple[int, ...] = ()
    start: int = 0
    lo: Fraction = Fraction(0)
    hi: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValueError("cylinders live in Z_p: start must be >= 0")
        object.__setattr__(self, "pattern", tuple(int(d) for d in self.pattern))
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))

    def __call__(self, s: SolenoidPoint) -> float:
        if not self.lo <= s.x_inf < self.hi:
            return 0.0
        x = s.x_p
        for offset, d in enumerate(self.pattern):
            if x.digit(self.start + offset) != d:
                return 0.0
        return 1.0


def phi_star() -> CylinderObservable:
    """Indicator of ``x_p`` in ``p Z_p``: the worked example's observable."""
    return CylinderObservable(pattern=(0,), start=0)


@dataclass(frozen=True)
class HarmonicEstimate:
    value: float
    stderr: float
    n_samples: int
    seed: int
    degenerate: int = 0

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "degenerate": self.degenerate,
        }


def _stderr(values: np.ndarray) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(n))


def _crn_matrix(
    phi: BoundaryObservable,
    gs: Sequence[AffineElement],
    samples: Sequence[TruncatedPAdic],
    extra: Iterable[TruncatedPAdic],
    degenerate_tol: float,
) -> tuple[np.ndarray, int, list[TruncatedPAdic]]:
    """``phi(project(g_j, x_i))`` for every pair; degenerate draws are replaced."""
    n = len(samples)
    out = np.empty((len(gs), n))
    used: list[TruncatedPAdic] = []
    degenerate = 0
    source = iter(samples)
    extra = iter(extra)
    i = 0
    while i < n:
        x = next(source, None)
        if x is None:
            x = next(extra)
        try:
            col = [phi.on_pair(g, x, degenerate_tol) for g in gs]
        except DegenerateBoundary:
            degenerate += 1
            continue
        out[:, i] = col
        used.append(x)
        i += 1
    return out, degenerate, used


def _samples(mu, n, seed, digits, workers=1) -> list[TruncatedPAdic]:
    return [s.value for s in boundary_batch(mu, n, seed, digits, workers=workers)]


def _extra_samples(mu, n, seed, digits):
    i = n
    while True:
        yield sample_boundary_padic(mu, digits, derive_seed(seed, i)).value
        i += 1


def poisson_transform_many(
    phi: BoundaryObservable,
    gs: Sequence[AffineElement],
    mu: StepMeasure,
    n: int,
    seed: int,
    digits: int = 8,
    degenerate_tol: float = 0.0,
    workers: int = 1,
) -> list[HarmonicEstimate]:
    """Estimates of ``f(g)`` for several ``g`` on one shared sample set."""
    samples = _samples(mu, n, seed, digits, workers)
    values, degenerate, _ = _crn_matrix(
        phi, gs, samples, _extra_samples(mu, n, seed, digits), degenerate_tol
    )
    return [
        HarmonicEstimate(float(np.mean(row)), _stderr(row), n, seed, degenerate)
        for row in values
    ]


def poisson_transform(
    phi: BoundaryObservable,
    g: AffineElement,
    mu: StepMeasure,
    n: int,
    seed: int,
    digits: int = 8,
    degenerate_tol: float = 0.0,
    workers: int = 1,
) -> HarmonicEstimate:
    """Monte Carlo estimate of ``f_phi(g)``; deterministic given ``seed``."""
    return poisson_transform_many(phi, [g], mu, n, seed, digits, degenerate_tol, workers)[0]


@dataclass(frozen=True)
class HarmonicityReport:
    g: str
    lhs: float
    rhs: float
    gap: float
    stderr: float
    threshold: float
    passed: bool
    exact_reduction_failures: int
    n_samples: int
    degenerate: int = 0

    def as_dict(self) -> dict:
        return {
            "g": self.g,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "gap": self.gap,
            "stderr": self.stderr,
            "threshold": self.threshold,
            "passed": self.passed,
            "exact_reduction_failures": self.exact_reduction_failures,
            "n_samples": self.n_samples,
            "degenerate": self.degenerate,
        }


def check_harmonicity(
    phi: BoundaryObservable,
    g: AffineElement,
    mu: StepMeasure,
    n: int,
    seed: int,
    digits: int = 8,
    n_sigma: float = 3.0,
    degenerate_tol: float = 0.0,
    workers: int = 1,
) -> HarmonicityReport:
    """Compare ``f(g)`` with ``sum_gamma mu(gamma) f(g gamma)`` on shared samples.

    Every sample is also checked for ``project(g gamma, x) == project(g, gamma . x)``
    (points and group elements); any mismatch is a bug, not noise.
    """
    atoms = mu.atoms
    gammas = [gamma for gamma, _ in atoms]
    gs = [g] + [compose(g, gamma) for gamma in gammas]
    samples = iter(_samples(mu, n, seed, digits, workers))
    extra = _extra_samples(mu, n, seed, digits)
    values = np.empty((len(gs), n))
    failures = degenerate = i = 0
    while i < n:
        x = next(samples, None)
        if x is None:
            x = next(extra)
        try:
            proj = [project(h, x, degenerate_tol=degenerate_tol) for h in gs]
            moved = [
                project(g, act_on_padic(gamma, x), degenerate_tol=degenerate_tol)
                for gamma in gammas
            ]
        except DegenerateBoundary:
            degenerate += 1
            continue
        values[:, i] = [phi(pr.point) for pr in proj]
        for gamma, left, right in zip(gammas, proj[1:], moved):
            if not (
                left.point.agrees_with(right.point)
                and left.gamma == compose(right.gamma, gamma)
            ):
                failures += 1
        i += 1
    # D * (f(g) - sum_j w_j f(g gamma_j)) with integer weights c_j = D w_j,
    # so identities that hold per sample give an exact zero
    D = math.lcm(*(w.denominator for _, w in atoms))
    c = np.array([int(w * D) for _, w in atoms], dtype=float)
    scaled = D * values[0] - c @ values[1:]
    mean_diff = float(np.mean(scaled)) / D
    lhs = float(np.mean(values[0]))
    rhs = float(c @ values[1:].mean(axis=1)) / D
    gap = abs(mean_diff)
    se = _stderr(scaled) / D
    threshold = n_sigma * se
    passed = gap <= threshold and failures == 0
    return HarmonicityReport(
        str(g), lhs, rhs, gap, se, threshold, passed, failures, n, degenerate
    )


# ----------------------------------------------------------------------
# the worked example
# ----------------------------------------------------------------------


def in_periodic_window(b: Fraction | float, p: int) -> bool:
    """``b`` in ``[0, 1) + pZ``."""
    return math.floor(Fraction(b)) % p == 0


def at_most_one_beta(p: int, bound: int = 64, max_e: int = 6) -> bool:
    """Bounded check that two translations differing by an element of
    ``p Z_p`` and both in Z[1/p] with a common ``[0, 1)`` window coincide.

    Searches pairs of ``j/p^e`` with ``beta_1 - beta_2`` in ``pZ_p`` and
    ``|beta_1 - beta_2| < 1``; the only such pairs are the diagonal ones.
    """
    from bsboundary.padic import PAdicRational, vp

    grid = {PAdicRational(p, j, e) for e in range(max_e + 1) for j in range(-bound, bound + 1)}
    grid = [k for k in grid if -1 < k.to_fraction() < 1]
    for b1 in grid:
        for b2 in grid:
            d = b1 - b2
            if not d.is_zero() and abs(d.to_fraction()) < 1 and vp(d) >= 1:
                return False
    return True


@dataclass(frozen=True)
class TableRow:
    b: float
    m: int
    estimate: float
    stderr: float
    lower_bound: float
    upper_bound: float
    cylinder_mass: float
    cylinder_stderr: float
    inside: bool
    passed: bool

    def as_dict(self) -> dict:
        return {
            "b": self.b,
            "m": self.m,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "pass": self.passed,
            "cylinder_mass": self.cylinder_mass,
            "cylinder_stderr": self.cylinder_stderr,
            "inside": self.inside,
        }


def worked_example_table(
    mu: StepMeasure,
    b_grid: Sequence[float | Fraction],
    m_range: Iterable[int],
    n: int,
    seed: int,
    digits: int = 8,
    n_sigma: float = 3.0,
) -> list[TableRow]:
    """Estimates of ``f(b, p^m)`` for ``phi*`` with the two-sided bounds.

    With ``nu_m`` the mass of ``p^(1-m) Z_p``, rows inside ``[0, 1) + pZ``
    must satisfy ``f >= nu_m`` and rows outside ``f <= 1 - nu_m`` (each up to
    ``n_sigma`` standard errors).  All rows share one sample set.
    """
    phi = phi_star()
    p = mu.p
    samples = boundary_batch(mu, n, seed, digits)
    rows = []
    for m in m_range:
        mass, mass_se = estimate_cylinder_mass(mu, 1 - m, n, seed, digits, samples=samples)
        for b in b_grid:
            g = AffineReal(b, m, p)
            est = poisson_transform(phi, g, mu, n, seed, digits)
            inside = in_periodic_window(g.b, p)
            lower = mass if inside else 0.0
            upper = 1.0 if inside else 1.0 - mass
            tol = n_sigma * est.stderr
            passed = lower - tol <= est.value <= upper + tol
            rows.append(
                TableRow(float(g.b), m, est.value, est.stderr, lower, upper, mass, mass_se, inside, passed)
            )
    return rows


# ----------------------------------------------------------------------
# martingale limit along sample paths
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeReport:
    n_paths: int
    horizon: int
    agreement: float
    passed: bool
    min_fraction: float
    paths: tuple[dict, ...] = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {
            "n_paths": self.n_paths,
            "horizon": self.horizon,
            "agreement": self.agreement,
            "passed": self.passed,
            "min_fraction": self.min_fraction,
            "paths": list(self.paths),
        }


def martingale_limit_probe(
    phi: BoundaryObservable,
    g: AffineElement,
    mu: StepMeasure,
    horizon: int = 200,
    n_paths: int = 100,
    seed: int = 0,
    n_inner: int = 2000,
    digits: int = 8,
    checkpoints: Sequence[int] | None = None,
    n_sigma: float = 3.0,
    min_fraction: float = 0.95,
) -> ProbeReport:
    """Follow ``f(g r_k(omega))`` along sampled paths and compare its value at
    the horizon with ``phi(project(g, bnd(omega)))``.

    ``bnd(omega)`` is the boundary sample driven by the path's own step
    stream, continued past the horizon until its digits are certified.  The
    harmonic function is estimated with ``n_inner`` shared samples drawn
    under a seed independent of the paths.
    """
    p = mu.p
    g = g.to_real()
    if checkpoints is None:
        checkpoints = sorted({0, horizon // 4, horizon // 2, horizon})
    inner_seed = derive_seed(seed, 1 << 40)
    rows = []
    agree = 0
    for j in range(n_paths):
        path_seed = derive_seed(seed, j)
        stream = step_stream(mu, path_seed)
        r = AffineExact.identity(p)
        at = {}
        for k in range(horizon + 1):
            if k in checkpoints:
                at[k] = compose(g, r)
            if k == horizon:
                break
            r = compose(r, mu.atoms[next(stream)][0])
        ests = poisson_transform_many(phi, [at[k] for k in checkpoints], mu, n_inner, inner_seed, digits)
        terminal = ests[-1]
        bnd = sample_boundary_padic(mu, max(digits, digits - g.m), path_seed).value
        target = phi.on_pair(g, bnd)
        tol = n_sigma * terminal.stderr + DEFAULT_RISK
        ok = abs(terminal.value - target) <= tol
        agree += ok
        rows.append(
            {
                "path": j,
                "seed": path_seed,
                "trajectory": [e.value for e in ests],
                "checkpoints": list(checkpoints),
                "terminal": terminal.value,
                "terminal_stderr": terminal.stderr,
                "boundary_value": target,
                "agree": bool(ok),
            }
        )
    frac = agree / n_paths if n_paths else 1.0
    return ProbeReport(n_paths, horizon, frac, frac >= min_fraction, min_fraction, tuple(rows))
