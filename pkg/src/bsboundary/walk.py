"""Right random walks on BS(1,p) and samplers for their boundary limit.

The translation part of ``r_n = w_1 ... w_n`` is the partial sum
``sum_{k<=n} a_1 ... a_{k-1} b_k``.  When the p-adic drift is negative the
sum converges in Q_p, and its law is the stationary measure on the p-adic
boundary.  When the real drift is negative it converges in R instead.

Seeding: every sample ``i`` of a batch uses its own 64-bit seed derived from
the master seed through :class:`numpy.random.SeedSequence` spawn keys, so a
batch is reproducible no matter how it is split across workers.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from collections.abc import Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import pairwise

import numpy as np
from scipy.optimize import brentq

from bsboundary.affine import AffineExact, compose
from bsboundary.errors import MaxStepsExceeded, NotContracting
from bsboundary.measure import StepMeasure, drift_inf, drift_p
from bsboundary.padic import TruncatedPAdic, vp

__all__ = [
    "BoundarySample",
    "CertificationPolicy",
    "WalkTrajectory",
    "boundary_batch",
    "certification_slack",
    "derive_seed",
    "estimate_cylinder_mass",
    "lundberg_exponent",
    "replay_partial_sum",
    "run_walk",
    "sample_boundary_padic",
    "sample_boundary_real",
    "sample_step",
    "step_stream",
]

_BLOCK = 256
DEFAULT_WINDOW = 32
DEFAULT_MAX_STEPS = 10_000
DEFAULT_RISK = 1e-9


def derive_seed(master: int, index: int) -> int:
    """64-bit seed of sample ``index`` under ``master``."""
    if master < 0 or index < 0:
        raise ValueError("seeds and indices must be non-negative")
    ss = np.random.SeedSequence(master, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def sample_step(mu: StepMeasure, rng: np.random.Generator) -> AffineExact:
    """Draw one atom by inverse CDF."""
    i = int(np.searchsorted(mu.cdf, rng.random(), side="right"))
    return mu.atoms[min(i, len(mu.atoms) - 1)][0]


def step_stream(mu: StepMeasure, seed: int) -> Iterator[int]:
    """Endless stream of atom indices; the same seed gives the same stream."""
    rng = np.random.default_rng(seed)
    last = len(mu.atoms) - 1
    cdf = mu.cdf
    while True:
        idx = np.searchsorted(cdf, rng.random(_BLOCK), side="right")
        np.minimum(idx, last, out=idx)
        yield from idx.tolist()


@dataclass(frozen=True)
class WalkTrajectory:
    """Steps ``w_1..w_n`` and partial products ``r_0..r_n`` (``r_0 = e``)."""

    steps: tuple[AffineExact, ...]
    partials: tuple[AffineExact, ...]
    seed: int

    @property
    def n(self) -> int:
        return len(self.steps)

    @property
    def end(self) -> AffineExact:
        return self.partials[-1]


def run_walk(mu: StepMeasure, n: int, seed: int) -> WalkTrajectory:
    """Right random walk of length ``n`` with exact partial products."""
    if n < 0:
        raise ValueError("walk length must be non-negative")
    stream = step_stream(mu, seed)
    steps = []
    partials = [AffineExact.identity(mu.p)]
    for _ in range(n):
        g = mu.atoms[next(stream)][0]
        steps.append(g)
        partials.append(compose(partials[-1], g))
    return WalkTrajectory(tuple(steps), tuple(partials), seed)


# ----------------------------------------------------------------------
# digit certification
# ----------------------------------------------------------------------


def lundberg_exponent(mu: StepMeasure) -> float:
    """Positive root of ``sum w exp(-theta m) = 1``; ``inf`` if no m < 0.

    For a walk on Z with increments ``m`` and positive mean, the chance of
    ever dropping ``d`` below the current level is at most ``exp(-theta d)``.
    """
    if mu.mean_exponent() <= 0:
        raise NotContracting("exponent walk has no positive drift")
    ms = np.array([g.m for g in mu.elements], dtype=float)
    ws = np.array([float(w) for w in mu.weights])
    if not (ms < 0).any():
        return math.inf

    def h(theta: float) -> float:
        return float(np.dot(ws, np.exp(-theta * ms))) - 1.0

    lo, hi = 1e-9, 1.0
    while h(hi) <= 0:
        hi *= 2
    while h(lo) >= 0:
        lo /= 2
    return brentq(h, lo, hi, xtol=1e-14)


def certification_slack(mu: StepMeasure, risk: float = DEFAULT_RISK) -> int:
    """Extra levels the exponent sum must clear so a digit flips w.p. < risk."""
    theta = lundberg_exponent(mu)
    if math.isinf(theta):
        return 0
    return max(0, math.ceil(math.log(1.0 / risk) / theta))


@dataclass(frozen=True)
class CertificationPolicy:
    """How a digit of the p-adic limit gets declared final.

    A digit at index ``i`` is certified at step ``k`` when, over the last
    ``window`` steps, every possible increment ``p**S_j * b`` had valuation
    above ``i``, the exponent sum never dipped below its value at the start
    of the window, and (conservative mode) ``S_k + min vp(b) >= i + 1 + slack``.
    ``slack=None`` derives the slack from :func:`certification_slack`.
    """

    window: int = DEFAULT_WINDOW
    slack: int | None = None
    conservative: bool = True
    risk: float = DEFAULT_RISK

    def resolved_slack(self, mu: StepMeasure) -> int:
        if not self.conservative:
            return 0
        if self.slack is not None:
            return self.slack
        return certification_slack(mu, self.risk)


@dataclass(frozen=True)
class BoundarySample:
    """One draw of the p-adic boundary limit.

    ``value`` is known modulo ``p**certified_digits``: every digit at an
    index below ``certified_digits`` is certified.
    """

    value: TruncatedPAdic
    certified_digits: int
    steps_used: int
    seed: int

    def as_row(self) -> dict:
        return {
            "seed": self.seed,
            "steps_used": self.steps_used,
            "v": self.value.v,
            "digits": "".join(str(d) for d in self.value.digits)
            if self.value.p <= 10
            else ",".join(str(d) for d in self.value.digits),
            "certified_digits": self.certified_digits,
        }


class _Accumulator:
    """Running sum ``num / p**E`` of Z[1/p] terms, kept modulo ``p**N``."""

    __slots__ = ("E", "N", "num", "p")

    def __init__(self, p: int, N: int) -> None:
        self.p, self.N, self.num, self.E = p, N, 0, 0

    def add(self, n_b: int, shift: int) -> None:
        # adds n_b * p**shift
        p = self.p
        if shift + self.E >= 0:
            self.num += n_b * p ** (shift + self.E)
        else:
            grow = -shift - self.E
            self.num = self.num * p**grow + n_b
            self.E += grow
        self.num %= p ** (self.N + self.E)

    def value(self) -> TruncatedPAdic:
        return TruncatedPAdic.normalized(self.p, -self.E, self.num, self.N)


def _atom_table(mu: StepMeasure):
    # (m, numerator, -e, vp(b) or None) per atom
    out = []
    for g, _ in mu.atoms:
        if g.b.is_zero():
            out.append((g.m, 0, 0, None))
        else:
            out.append((g.m, g.b.n, -g.b.e, vp(g.b)))
    return out


def sample_boundary_padic(
    mu: StepMeasure,
    digits: int = 8,
    seed: int = 0,
    policy: CertificationPolicy | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> BoundarySample:
    """Sample ``Z_inf = sum a_1...a_{n-1} b_n`` in Q_p modulo ``p**digits``.

    Raises :class:`NotContracting` unless the p-adic drift is negative, and
    :class:`MaxStepsExceeded` when certification does not happen in time.
    """
    if drift_p(mu).sign >= 0:
        raise NotContracting("p-adic drift must be negative")
    policy = policy or CertificationPolicy()
    N = digits
    p = mu.p
    table = _atom_table(mu)
    bmin = mu.min_translation_valuation()
    if bmin is None:
        return BoundarySample(TruncatedPAdic.zero(p, N), N, 0, seed)
    slack = policy.resolved_slack(mu)
    W = policy.window
    acc = _Accumulator(p, N)
    history = [0]  # S_0 .. S_k
    S = 0
    stream = step_stream(mu, seed)
    for k in range(1, max_steps + 1):
        m, n_b, neg_e, vb = table[next(stream)]
        if vb is not None and S + vb < N:
            acc.add(n_b, S + neg_e)
        S += m
        history.append(S)
        if k < W or S + bmin < N + slack:
            continue
        win = history[k - W : k + 1]
        if min(win) != win[0] or win[0] + bmin < N:
            continue
        return BoundarySample(acc.value(), N, k, seed)
    raise MaxStepsExceeded(f"digits not certified within {max_steps} steps (seed {seed})")


def replay_partial_sum(mu: StepMeasure, digits: int, seed: int, steps: int) -> TruncatedPAdic:
    """Partial sum after exactly ``steps`` steps of the stream for ``seed``."""
    N = digits
    table = _atom_table(mu)
    acc = _Accumulator(mu.p, N)
    S = 0
    stream = step_stream(mu, seed)
    for _ in range(steps):
        m, n_b, neg_e, vb = table[next(stream)]
        if vb is not None and S + vb < N:
            acc.add(n_b, S + neg_e)
        S += m
    return acc.value()


def sample_boundary_real(
    mu: StepMeasure,
    tolerance: float = 1e-12,
    seed: int = 0,
    window: int = DEFAULT_WINDOW,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> float:
    """Sample ``Z_inf`` in R for a measure contracting on the line."""
    if drift_inf(mu).sign >= 0:
        raise NotContracting("real drift must be negative")
    p = float(mu.p)
    atoms = [(g.m, float(g.b)) for g in mu.elements]
    bmax = max(abs(b) for _, b in atoms)
    total = 0.0
    S = 0
    quiet = 0
    stream = step_stream(mu, seed)
    for _ in range(max_steps):
        m, b = atoms[next(stream)]
        scale = p**S
        total += scale * b
        S += m
        if p**S * bmax < tolerance:
            quiet += 1
            if quiet >= window:
                return total
        else:
            quiet = 0
    raise MaxStepsExceeded(f"real series did not settle within {max_steps} steps")


# ----------------------------------------------------------------------
# batches
# ----------------------------------------------------------------------


def _batch_chunk(args) -> list[BoundarySample]:
    mu, seed, digits, policy, max_steps, lo, hi = args
    return [
        sample_boundary_padic(mu, digits, derive_seed(seed, i), policy, max_steps)
        for i in range(lo, hi)
    ]


_BATCH_CACHE: OrderedDict[tuple, tuple[BoundarySample, ...]] = OrderedDict()
_BATCH_CACHE_SIZE = 32


def _compute_batch(mu, n, seed, digits, policy, max_steps, workers):
    if workers <= 1 or n < 2 * workers:
        return tuple(_batch_chunk((mu, seed, digits, policy, max_steps, 0, n)))
    bounds = np.linspace(0, n, 4 * workers + 1).astype(int)
    jobs = [
        (mu, seed, digits, policy, max_steps, int(lo), int(hi))
        for lo, hi in pairwise(bounds)
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunks = list(pool.map(_batch_chunk, jobs))
    return tuple(s for chunk in chunks for s in chunk)


def boundary_batch(
    mu: StepMeasure,
    n: int,
    seed: int,
    digits: int = 8,
    policy: CertificationPolicy | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
    workers: int = 1,
) -> tuple[BoundarySample, ...]:
    """``n`` boundary samples, sample ``i`` seeded by ``derive_seed(seed, i)``.

    Results are memoized per argument set; ``workers`` never changes them.
    """
    if drift_p(mu).sign >= 0:
        raise NotContracting("p-adic drift must be negative")
    policy = policy or CertificationPolicy()
    key = (mu, n, seed, digits, policy, max_steps)
    if key in _BATCH_CACHE:
        _BATCH_CACHE.move_to_end(key)
        return _BATCH_CACHE[key]
    batch = _compute_batch(mu, n, seed, digits, policy, max_steps, workers)
    _BATCH_CACHE[key] = batch
    if len(_BATCH_CACHE) > _BATCH_CACHE_SIZE:
        _BATCH_CACHE.popitem(last=False)
    return batch


def estimate_cylinder_mass(
    mu: StepMeasure,
    threshold: int,
    n_samples: int,
    seed: int,
    digits: int = 8,
    samples: Sequence[BoundarySample] | None = None,
) -> tuple[float, float]:
    """Estimate ``nu(p**threshold Z_p)`` with its binomial standard error."""
    if samples is None:
        samples = boundary_batch(mu, n_samples, seed, digits)
    hits = sum(s.value.valuation_at_least(threshold) for s in samples)
    n = len(samples)
    est = hits / n
    return est, math.sqrt(est * (1.0 - est) / n)
