from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from oracles import greedy_digits, walk_translation

from bsboundary.errors import MaxStepsExceeded, NotContracting
from bsboundary.measure import StepMeasure, mu_star
from bsboundary.padic import truncate, vp
from bsboundary.walk import (
    CertificationPolicy,
    _compute_batch,
    boundary_batch,
    certification_slack,
    derive_seed,
    estimate_cylinder_mass,
    lundberg_exponent,
    replay_partial_sum,
    run_walk,
    sample_boundary_padic,
    sample_boundary_real,
    sample_step,
    step_stream,
)


def test_point_mass_step():
    mu = StepMeasure.from_triples(2, [(1, 1, 1)])
    rng = np.random.default_rng(0)
    assert all(sample_step(mu, rng) == mu.atoms[0][0] for _ in range(20))


def test_two_equal_atoms_frequency():
    mu = StepMeasure.from_triples(2, [(0, 1, "1/2"), (1, 1, "1/2")])
    stream = step_stream(mu, 3)
    n = 100_000
    hits = sum(next(stream) == 0 for _ in range(n))
    assert abs(hits / n - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_seeded_streams():
    a = step_stream(mu_star(2), 42)
    b = step_stream(mu_star(2), 42)
    assert [next(a) for _ in range(600)] == [next(b) for _ in range(600)]
    assert derive_seed(1, 2) == derive_seed(1, 2) != derive_seed(1, 3)
    with pytest.raises(ValueError):
        derive_seed(-1, 0)


def test_walk_partials_match_expansion(mu2):
    walk = run_walk(mu2, 60, seed=9)
    assert run_walk(mu2, 0, 9).partials == (walk.partials[0],)
    assert walk.partials[0].is_identity()
    for k in (1, 7, 60):
        steps = [(g.b.to_fraction(), g.a) for g in walk.steps[:k]]
        assert walk.partials[k].b.to_fraction() == walk_translation(steps)
        assert walk.partials[k].m == sum(g.m for g in walk.steps[:k])


def test_lundberg_slack_for_mu_star(mu2):
    # (2/3) exp(-t) + (1/3) exp(t) = 1 has roots exp(t) in {1, 2}
    assert lundberg_exponent(mu2) == pytest.approx(math.log(2), rel=1e-10)
    assert certification_slack(mu2, 1e-9) == math.ceil(math.log(1e9) / math.log(2))
    only_up = StepMeasure.from_triples(2, [(1, 1, 1)])
    assert certification_slack(only_up) == 0
    with pytest.raises(NotContracting):
        lundberg_exponent(StepMeasure.from_triples(2, [(1, -1, 1)]))


def test_all_zero_translations():
    mu = StepMeasure.from_triples(2, [(0, 1, "2/3"), (0, -1, "1/3")])
    s = sample_boundary_padic(mu, 8, seed=1)
    assert s.value.is_zero() and s.steps_used == 0


@pytest.mark.parametrize("p", [2, 3, 5])
def test_geometric_point_mass(p):
    # sum of p^(n-1) converges to 1/(1-p) in Q_p
    mu = StepMeasure.from_triples(p, [(1, 1, 1)])
    s = sample_boundary_padic(mu, 10, seed=0)
    assert s.value.v == 0
    assert s.value.digits == greedy_digits(Fraction(1, 1 - p), p, 0, 10) == [1] * 10


def test_sample_matches_walk_translation(mu2):
    for i in range(30):
        seed = derive_seed(5, i)
        s = sample_boundary_padic(mu2, 8, seed)
        exact = run_walk(mu2, s.steps_used, seed).end.b
        if vp(exact) >= 8:
            assert s.value.is_zero()
        else:
            assert s.value.agrees_with(truncate(exact, 8))
        assert s.certified_digits == 8
        assert replay_partial_sum(mu2, 8, seed, s.steps_used) == s.value


def test_determinism_and_rows(mu2):
    a = sample_boundary_padic(mu2, 8, 77)
    b = sample_boundary_padic(mu2, 8, 77)
    assert a == b
    row = a.as_row()
    assert list(row) == ["seed", "steps_used", "v", "digits", "certified_digits"]
    assert row["digits"] == "".join(map(str, a.value.digits))


def test_policy_variants(mu2):
    loose = CertificationPolicy(window=32, conservative=False)
    strict = CertificationPolicy(window=32, slack=40)
    s1 = sample_boundary_padic(mu2, 8, 3, loose)
    s2 = sample_boundary_padic(mu2, 8, 3, strict)
    assert s1.steps_used < s2.steps_used
    assert loose.resolved_slack(mu2) == 0 and strict.resolved_slack(mu2) == 40


def test_errors(mu2):
    with pytest.raises(MaxStepsExceeded):
        sample_boundary_padic(mu2, 8, 0, max_steps=10)
    expanding = StepMeasure.from_triples(2, [(1, -1, "2/3"), (0, 1, "1/3")])
    with pytest.raises(NotContracting):
        sample_boundary_padic(expanding, 8, 0)
    with pytest.raises(NotContracting):
        sample_boundary_real(mu2)
    with pytest.raises(ValueError):
        run_walk(mu2, -1, 0)


def test_batch_is_worker_independent(mu2):
    policy = CertificationPolicy()
    one = _compute_batch(mu2, 40, 11, 8, policy, 10_000, 1)
    three = _compute_batch(mu2, 40, 11, 8, policy, 10_000, 3)
    assert one == three
    assert boundary_batch(mu2, 40, 11, 8) == one
    assert [s.seed for s in one] == [derive_seed(11, i) for i in range(40)]


def test_real_point_mass():
    mu = StepMeasure.from_triples(2, [(1, -1, 1)])
    assert sample_boundary_real(mu, 1e-13, seed=0) == pytest.approx(2.0, abs=1e-12)
    mu3 = StepMeasure.from_triples(3, [(1, -1, 1)])
    assert sample_boundary_real(mu3, 1e-13, seed=0) == pytest.approx(1.5, abs=1e-12)
    zero = StepMeasure.from_triples(2, [(0, -1, 1)])
    assert sample_boundary_real(zero, seed=0) == 0.0


def test_real_mean_matches_expectation_recursion():
    # b uniform on {0, 1} independent of m; E Z = E b / (1 - E a)
    mu = StepMeasure.from_triples(
        2, [(0, -1, "7/16"), (1, -1, "7/16"), (0, 1, "1/16"), (1, 1, "1/16")]
    )
    n = 10_000
    z = np.array([sample_boundary_real(mu, 1e-12, derive_seed(8, i)) for i in range(n)])
    expected = 0.5 / (1 - (Fraction(7, 8) / 2 + Fraction(1, 8) * 2))
    assert abs(z.mean() - float(expected)) <= 3 * z.std(ddof=1) / math.sqrt(n)


def test_cylinder_mass(mu2):
    samples = boundary_batch(mu2, 2000, 4, 8)
    full, se = estimate_cylinder_mass(mu2, -10**6, 2000, 4, samples=samples)
    assert full == 1.0 and se == 0.0
    masses = [estimate_cylinder_mass(mu2, v, 2000, 4, samples=samples)[0] for v in (0, -2, -4, -8)]
    assert masses == sorted(masses)
    assert estimate_cylinder_mass(mu2, 0, 2000, 4)[0] == masses[0]
