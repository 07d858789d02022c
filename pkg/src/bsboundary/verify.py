"""Invariant suites behind ``verify-all``.

Each suite returns a :class:`SuiteResult` whose ``details`` hold only
deterministic quantities (counts, estimates, thresholds), never timings, so
that reports are byte-identical for a fixed seed whatever the worker count.
Random inputs of suite ``k`` are drawn from ``derive_seed(seed, k)``.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from itertools import pairwise

import numpy as np

from bsboundary.affine import AffineExact, AffineReal, compose
from bsboundary.errors import InvalidMeasure, NotContracting
from bsboundary.harmonic import (
    CylinderObservable,
    at_most_one_beta,
    check_harmonicity,
    martingale_limit_probe,
    phi_star,
    poisson_transform,
    worked_example_table,
)
from bsboundary.measure import (
    StepMeasure,
    boundary_spectrum,
    drift_inf,
    drift_p,
    format_measure,
    validate,
)
from bsboundary.padic import (
    PAdicRational,
    TruncatedPAdic,
    frac_part_alpha,
    padic_norm,
    truncate,
    vp,
)
from bsboundary.solenoid import (
    act,
    fundamental_domain_solutions,
    nu_tilde_batch,
    project,
    star_invariance_check,
)
from bsboundary.walk import (
    CertificationPolicy,
    boundary_batch,
    derive_seed,
    replay_partial_sum,
)

__all__ = [
    "SUITES",
    "SuiteResult",
    "VerifyConfig",
    "report_json",
    "suite_arithmetic",
    "suite_drift",
    "suite_harmonicity",
    "suite_limit_bounds",
    "suite_martingale",
    "suite_periodicity",
    "suite_sampler",
    "suite_star_invariance",
    "suite_stationarity",
    "suite_uniqueness",
    "verify_all",
]


@dataclass(frozen=True)
class VerifyConfig:
    """Sizes of every suite.  The defaults are the full acceptance sizes."""

    seed: int
    digits: int = 8
    workers: int = 1
    arithmetic_n: int = 10_000
    arithmetic_primes: tuple[int, ...] = (2, 3)
    uniqueness_n: int = 1_000
    star_n: int = 10_000
    sampler_n: int = 1_000
    stationarity_n: int = 20_000
    harmonic_n: int = 100_000
    periodicity_cases: int = 20
    periodicity_n: int = 20_000
    limit_n: int = 100_000
    limit_m_max: int = 8
    probe_paths: int = 100
    probe_horizon: int = 200
    probe_inner: int = 2_000

    @classmethod
    def quick(cls, seed: int, **overrides) -> VerifyConfig:
        """Small sizes for smoke runs; every suite still executes."""
        base = cls(
            seed,
            arithmetic_n=500,
            uniqueness_n=40,
            star_n=500,
            sampler_n=200,
            stationarity_n=2_000,
            harmonic_n=4_000,
            periodicity_cases=5,
            periodicity_n=1_000,
            limit_n=4_000,
            probe_paths=10,
            probe_horizon=60,
            probe_inner=400,
        )
        return replace(base, **overrides)

    def sizes(self) -> dict:
        d = asdict(self)
        d.pop("workers")
        d["arithmetic_primes"] = list(self.arithmetic_primes)
        return d


@dataclass
class SuiteResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "details": self.details}


def _rng(seed: int, suite: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, suite))


# ----------------------------------------------------------------------
# exact suites
# ----------------------------------------------------------------------


def _random_rational(rng: np.random.Generator, p: int) -> PAdicRational:
    n = int(rng.integers(-10**6, 10**6 + 1))
    if rng.random() < 0.5:
        return PAdicRational(p, n, int(rng.integers(0, 9)))
    return PAdicRational(p, n * p ** int(rng.integers(0, 6)), 0)


def suite_arithmetic(mu: StepMeasure, cfg: VerifyConfig) -> SuiteResult:
    """Ultrametric inequality, norm multiplicativity and the alpha contract."""
    primes = sorted(set(cfg.arithmetic_primes) | {mu.p})
    rng = _rng(cfg.seed, 1)
    counts = {}
    for p in primes:
        fails = {"ultrametric": 0, "multiplicative": 0, "alpha": 0, "truncation": 0}
        for _ in range(cfg.arithmetic_n):
            x, y = _random_rational(rng, p), _random_rational(rng, p)
            nx, ny, nsum = padic_norm(x), padic_norm(y), padic_norm(x + y)
            if nsum > max(nx, ny) or (nx != ny and nsum != max(nx, ny)):
                fails["ultrametric"] += 1
            if padic_norm(x * y) != nx * ny:
                fails["multiplicative"] += 1
            a = frac_part_alpha(x)
            if not (0 <= a.to_fraction() < 1 and vp(x - a) >= 0):
                fails["alpha"] += 1
            N = 12
            small = vp(x) < N and vp(y) < N and vp(x + y) < N
            if small and not (truncate(x, N) + truncate(y, N)).agrees_with(truncate(x + y, N)):
                fails["truncation"] += 1
        counts[str(p)] = fails
    total = sum(sum(f.values()) for f in counts.values())
    return SuiteResult(
        "arithmetic_laws",
        total == 0,
        {"n_per_prime": cfg.arithmetic_n, "failures": counts},
    )


def _random_uniqueness_case(rng: np.random.Generator, p: int, search_bound: int, max_e: int):
    """A non-degenerate ``(g, x)`` whose translation lies inside the search box.

    The solution ``k`` has denominator ``p^e`` and ``|k| < |t| + 1``, so ``e``
    is capped where ``p^e`` still fits under ``search_bound``.
    """
    e_cap = 0
    while e_cap < max_e and p ** (e_cap + 1) <= search_bound:
        e_cap += 1
    e = int(rng.integers(0, e_cap + 1))
    m = int(rng.integers(-3, 4))
    reach = max(search_bound // p**e - 1, 0)
    t = int(rng.integers(-reach, reach + 1))
    # b has denominator p^(max_e + 4) with a unit numerator, alpha at most p^max_e,
    # so b + alpha is never an integer
    scale = p ** (max_e + 4)
    j = int(rng.integers(1, scale))
    while j % p == 0:
        j = int(rng.integers(1, scale))
    b = Fraction(t) + Fraction(j, scale)
    u = int(rng.integers(1, 10**6))
    while u % p == 0:
        u = int(rng.integers(1, 10**6))
    # vp(p^m x) = -e
    x = PAdicRational(p, u, 0).mul_by_power(-e - m)
    return AffineReal(b, m, p), x


def suite_uniqueness(
    mu: StepMeasure, cfg: VerifyConfig, search_bound: int = 64, max_e: int = 6
) -> SuiteResult:
    """Exhaustive search finds exactly one domain-mapping element, equal to ``project``'s."""
    p = mu.p
    rng = _rng(cfg.seed, 2)
    multiplicity = mismatch = 0
    for _ in range(cfg.uniqueness_n):
        g, x = _random_uniqueness_case(rng, p, search_bound, max_e)
        found = fundamental_domain_solutions(g, x, search_bound, max_e)
        if len(found) != 1:
            multiplicity += 1
            continue
        gamma = project(g, truncate(x, max(12, vp(x) + 12))).gamma
        if found[0] != gamma:
            mismatch += 1
    beta_ok = at_most_one_beta(p)
    return SuiteResult(
        "projection_uniqueness",
        multiplicity == 0 and mismatch == 0 and beta_ok,
        {
            "n_cases": cfg.uniqueness_n,
            "search_bound": search_bound,
            "max_e": max_e,
            "not_exactly_one": multiplicity,
            "differs_from_project": mismatch,
            "at_most_one_beta": beta_ok,
        },
    )


def _random_word(rng: np.random.Generator, mu: StepMeasure, max_len: int = 5) -> AffineExact:
    gamma = AffineExact.identity(mu.p)
    for _ in range(int(rng.integers(1, max_len + 1))):
        gamma = compose(gamma, mu.atoms[int(rng.integers(len(mu.atoms)))][0])
    return gamma


def suite_star_invariance(mu: StepMeasure, cfg: VerifyConfig) -> SuiteResult:
    """``project(g gamma^-1, gamma x) == project(g, x)`` for words over the support."""
    p = mu.p
    rng = _rng(cfg.seed, 3)
    failures = 0
    for _ in range(cfg.star_n):
        g = AffineReal(float(rng.uniform(-5, 5)), int(rng.integers(-4, 5)), p)
        v = int(rng.integers(-4, 5))
        digits = [int(d) for d in rng.integers(0, p, size=24)]
        x = TruncatedPAdic.from_digits(p, v, digits)
        gamma = _random_word(rng, mu)
        if not star_invariance_check(g, x, gamma):
            failures += 1
    return SuiteResult("star_invariance", failures == 0, {"n_cases": cfg.star_n, "failures": failures})


def suite_drift(mu: StepMeasure, cfg: VerifyConfig) -> SuiteResult:
    """Exact drifts of the measure; their sum vanishes for BS(1,p) steps."""
    dp, di = drift_p(mu), drift_inf(mu)
    spectrum = [d.place for d in boundary_spectrum(mu)]
    balanced = dp.exact_coeff + di.exact_coeff == 0 and dp.base == di.base
    return SuiteResult(
        "drift_exactness",
        balanced and dp.sign < 0,
        {"drift_p": dp.as_dict(), "drift_inf": di.as_dict(), "spectrum": spectrum},
    )


# ----------------------------------------------------------------------
# sampler and statistical suites
# ----------------------------------------------------------------------


def _z_two_proportions(h1: int, h2: int, n: int) -> tuple[float, float]:
    f1, f2 = h1 / n, h2 / n
    sigma = math.sqrt((f1 * (1 - f1) + f2 * (1 - f2)) / n)
    return abs(f1 - f2), sigma


def suite_sampler(mu: StepMeasure, cfg: VerifyConfig) -> SuiteResult:
    """Certified digits survive a 4x longer replay; two batches agree on ``d_0``."""
    n, digits = cfg.sampler_n, cfg.digits
    batch = boundary_batch(mu, n, derive_seed(cfg.seed, 5), digits, workers=cfg.workers)
    altered = 0
    for s in batch:
        replay = replay_partial_sum(mu, digits, s.seed, 4 * max(s.steps_used, 1))
        if not replay.agrees_with(s.value, s.certified_digits):
            altered += 1
    other = boundary_batch(mu, n, derive_seed(cfg.seed, 6), digits, workers=cfg.workers)
    h1 = sum(s.value.digit(0) == 0 for s in batch)
    h2 = sum(s.value.digit(0) == 0 for s in other)
    gap, sigma = _z_two_proportions(h1, h2, n)
    policy = CertificationPolicy()
    return SuiteResult(
        "sampler_soundness",
        altered == 0 and gap <= 3 * sigma,
        {
            "n_seeds": n,
            "altered_digits": altered,
            "d0_zero_frequency": [h1 / n, h2 / n],
            "gap": gap,
            "threshold": 3 * sigma,
            # the limit converges almost surely with no known rate, so the
            # certification rule is a heuristic with a risk-based slack
            "certification": {
                "rule": "heuristic window plus risk slack",
                "window": policy.window,
                "slack": policy.resolved_slack(mu),
                "risk": policy.risk,
            },
        },
    )


def suite_stationarity(mu: StepMeasure, cfg: VerifyConfig) -> SuiteResult:
    """Pushing solenoid samples by independent steps leaves cylinder masses unchanged."""
    n = cfg.stationarity_n
    points = nu_tilde_batch(mu, n, derive_seed(cfg.seed, 7), cfg.digits)
    rng = _rng(cfg.seed, 7)
    idx = np.searchsorted(mu.cdf, rng.random(n), side="right")
    phi = CylinderObservable(pattern=(0, 1), start=0, lo=Fraction(0), hi=Fraction(1, 2))
    before = np.array([phi(s) for s in points])
    after = np.array([phi(act(mu.atoms[int(i)][0], s)) for i, s in zip(idx, points)])
    diff = after - before
    gap = abs(float(diff.mean()))
    se = float(diff.std(ddof=1) / math.sqrt(n))
    return SuiteResult(
        "stationarity",
        gap <= 3 * se,
        {
            "n_samples": n,
            "mass_before": float(before.mean()),
            "mass_after": float(after.mean()),
            "gap": gap,
            "threshold": 3 * se,
        },
    )


def harmonic_test_points(p: int) -> list[AffineReal]:
    return [AffineReal(0.3, 0, p), AffineReal(0.5, 1, p), AffineReal(1.7, -1, p)]


def suite_harmonicity(mu: StepMeasure, cfg: VerifyConfig) -> SuiteResult:
    """Mean-value identity at three group elements, on shared samples."""
    reports = [
        check_harmonicity(
            phi_star(), g, mu, cfg.harmonic_n, cfg.seed, cfg.digits, workers=cfg.workers
        )
        for g in harmonic_test_points(mu.p)
    ]
    return SuiteResult(
        "harmonicity",
        all(r.passed for r in reports),
        {"reports": [r.as_dict() for r in reports]},
    )


def suite_periodicity(mu: StepMeasure, cfg: VerifyConfig) -> SuiteResult:
    """``f(b + p, p^m)`` reproduces ``f(b, p^m)`` bit for bit."""
    p = mu.p
    rng = _rng(cfg.seed, 9)
    phi = phi_star()
    mismatches = 0
    cases = []
    for _ in range(cfg.periodicity_cases):
        b = float(rng.uniform(-3, 3))
        m = int(rng.integers(-2, 9))
        e1 = poisson_transform(phi, AffineReal(b, m, p), mu, cfg.periodicity_n, cfg.seed, cfg.digits)
        shifted = AffineReal(Fraction(b) + p, m, p)
        e2 = poisson_transform(phi, shifted, mu, cfg.periodicity_n, cfg.seed, cfg.digits)
        same = e1.value == e2.value and e1.stderr == e2.stderr
        mismatches += not same
        cases.append({"b": b, "m": m, "estimate": e1.value, "identical": same})
    return SuiteResult(
        "periodicity", mismatches == 0, {"n_samples": cfg.periodicity_n, "cases": cases}
    )


def suite_limit_bounds(mu: StepMeasure, cfg: VerifyConfig) -> SuiteResult:
    """Two-sided bounds of the worked example and growth of the cylinder mass."""
    b_grid = [0.25, 0.5, 0.75, 1.5]
    m_range = range(1, cfg.limit_m_max + 1)
    rows = worked_example_table(mu, b_grid, m_range, cfg.limit_n, cfg.seed, cfg.digits)
    masses = [next(r.cylinder_mass for r in rows if r.m == m) for m in m_range]
    nondecreasing = all(a <= b for a, b in pairwise(masses))
    final_ok = masses[-1] >= 0.99
    bounds_ok = all(r.passed for r in rows)
    return SuiteResult(
        "limit_bounds",
        bounds_ok and nondecreasing and final_ok,
        {
            "n_samples": cfg.limit_n,
            "cylinder_masses": masses,
            "nondecreasing": nondecreasing,
            "final_mass_at_least_0.99": final_ok,
            "rows": [r.as_dict() for r in rows],
        },
    )


def suite_martingale(mu: StepMeasure, cfg: VerifyConfig) -> SuiteResult:
    report = martingale_limit_probe(
        phi_star(),
        AffineReal(0.3, 0, mu.p),
        mu,
        horizon=cfg.probe_horizon,
        n_paths=cfg.probe_paths,
        seed=derive_seed(cfg.seed, 11),
        n_inner=cfg.probe_inner,
        digits=cfg.digits,
    )
    d = report.as_dict()
    d["paths"] = [
        {k: row[k] for k in ("path", "terminal", "boundary_value", "agree")} for row in d["paths"]
    ]
    return SuiteResult("martingale_limit", report.passed, d)


SUITES: dict[str, Callable[[StepMeasure, VerifyConfig], SuiteResult]] = {
    "arithmetic_laws": suite_arithmetic,
    "projection_uniqueness": suite_uniqueness,
    "star_invariance": suite_star_invariance,
    "drift_exactness": suite_drift,
    "sampler_soundness": suite_sampler,
    "stationarity": suite_stationarity,
    "harmonicity": suite_harmonicity,
    "periodicity": suite_periodicity,
    "limit_bounds": suite_limit_bounds,
    "martingale_limit": suite_martingale,
}


def verify_all(mu: StepMeasure, cfg: VerifyConfig, suites: list[str] | None = None) -> dict:
    """Run the suites in order and aggregate pass/fail.

    The measure is validated first; an invalid or non-contracting measure
    raises before any suite runs.
    """
    report = validate(mu)
    if not report.valid:
        raise InvalidMeasure("; ".join(report.notes) or "invalid measure")
    if drift_p(mu).sign >= 0:
        raise NotContracting("verification needs a measure contracting on Q_p")
    names = list(SUITES) if suites is None else suites
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise KeyError(f"unknown suites: {unknown}")
    results = [SUITES[name](mu, cfg).as_dict() for name in names]
    return {
        "seed": cfg.seed,
        "measure": format_measure(mu),
        "sizes": cfg.sizes(),
        "suites": results,
        "all_passed": all(r["passed"] for r in results),
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
