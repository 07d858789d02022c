from __future__ import annotations

import math
from fractions import Fraction

import pytest

from bsboundary.affine import AffineReal
from bsboundary.errors import NotContracting
from bsboundary.harmonic import (
    ConstantObservable,
    CylinderObservable,
    at_most_one_beta,
    check_harmonicity,
    in_periodic_window,
    martingale_limit_probe,
    phi_star,
    poisson_transform,
    poisson_transform_many,
    worked_example_table,
)
from bsboundary.measure import StepMeasure
from bsboundary.padic import TruncatedPAdic
from bsboundary.solenoid import SolenoidPoint

N = 3000


def test_constant_observable(mu2):
    est = poisson_transform(ConstantObservable(1.0), AffineReal(0.3, 2, 2), mu2, N, 1)
    assert est.value == 1.0 and est.stderr == 0.0
    rep = check_harmonicity(ConstantObservable(2.5), AffineReal(0.3, 0, 2), mu2, N, 1)
    assert rep.gap == 0.0 and rep.passed and rep.exact_reduction_failures == 0


def test_cylinder_observable():
    phi = CylinderObservable(pattern=(1, 0), start=1, lo=Fraction(0), hi=Fraction(1, 2))
    x = TruncatedPAdic.from_digits(2, 0, [0, 1, 0, 1])
    assert phi(SolenoidPoint(Fraction(1, 4), x)) == 1.0
    assert phi(SolenoidPoint(Fraction(3, 4), x)) == 0.0
    assert phi_star()(SolenoidPoint(Fraction(0), x)) == 1.0
    with pytest.raises(ValueError):
        CylinderObservable(pattern=(1,), start=-1)


def test_identity_estimate_is_self_consistent(mu2):
    a = poisson_transform(phi_star(), AffineReal.identity(2), mu2, N, 10)
    b = poisson_transform(phi_star(), AffineReal.identity(2), mu2, N, 11)
    assert abs(a.value - b.value) <= 3 * math.hypot(a.stderr, b.stderr)


def test_shared_samples(mu2):
    g, h = AffineReal(0.3, 1, 2), AffineReal(0.8, -1, 2)
    many = poisson_transform_many(phi_star(), [g, h], mu2, N, 5)
    assert many[0] == poisson_transform(phi_star(), g, mu2, N, 5)
    assert many[1] == poisson_transform(phi_star(), h, mu2, N, 5)


def test_periodicity_is_bitwise(mu2):
    for b, m in [(0.3, 0), (-1.2, 3), (2.9, -1)]:
        e1 = poisson_transform(phi_star(), AffineReal(b, m, 2), mu2, N, 2)
        e2 = poisson_transform(phi_star(), AffineReal(Fraction(b) + 2, m, 2), mu2, N, 2)
        assert (e1.value, e1.stderr) == (e2.value, e2.stderr)


@pytest.mark.parametrize("g", [AffineReal(0.5, 0, 2), AffineReal(0.3, 1, 2), AffineReal(1.7, -1, 2)])
def test_harmonicity_small(mu2, g):
    rep = check_harmonicity(phi_star(), g, mu2, 20_000, 3)
    assert rep.exact_reduction_failures == 0
    assert rep.passed, rep.as_dict()


def test_harmonicity_p3(mu3):
    rep = check_harmonicity(phi_star(), AffineReal(0.4, 1, 3), mu3, 10_000, 3)
    assert rep.exact_reduction_failures == 0 and rep.passed


def test_periodic_window():
    assert in_periodic_window(0.5, 2) and in_periodic_window(-1.5, 2)
    assert not in_periodic_window(1.5, 2)
    assert in_periodic_window(Fraction(7, 2), 3)
    assert at_most_one_beta(2) and at_most_one_beta(3)


def test_worked_example_small(mu2):
    rows = worked_example_table(mu2, [0.5, 1.5, 2.5], range(-1, 4), 4000, 8)
    assert all(r.passed for r in rows)
    by_key = {(r.b, r.m): r for r in rows}
    for m in range(-1, 4):
        # rows b and b + p coincide
        assert by_key[(0.5, m)].estimate == by_key[(2.5, m)].estimate
        assert by_key[(0.5, m)].lower_bound == by_key[(0.5, m)].cylinder_mass
        assert by_key[(1.5, m)].upper_bound == pytest.approx(1 - by_key[(1.5, m)].cylinder_mass)
    assert set(rows[0].as_dict()) >= {"b", "m", "estimate", "stderr", "lower_bound", "upper_bound", "pass"}


def test_probe_constant_observable(mu2):
    rep = martingale_limit_probe(ConstantObservable(1.0), AffineReal(0.3, 0, 2), mu2, 40, 5, 1, 200)
    assert rep.agreement == 1.0 and rep.passed
    assert all(row["terminal"] == 1.0 for row in rep.paths)


def test_probe_point_mass():
    mu = StepMeasure.from_triples(2, [(1, 1, 1)])
    rep = martingale_limit_probe(phi_star(), AffineReal(0.3, 0, 2), mu, 30, 3, 2, 200)
    # the walk is deterministic, so every path carries the same trajectory
    assert len({tuple(r["trajectory"]) for r in rep.paths}) == 1
    assert rep.passed


def test_probe_mu_star(mu2):
    rep = martingale_limit_probe(phi_star(), AffineReal(0.3, 0, 2), mu2, 120, 12, 4, 500)
    assert rep.passed, rep.agreement


def test_non_contracting_measure():
    mu = StepMeasure.from_triples(2, [(1, -1, "2/3"), (0, 1, "1/3")])
    with pytest.raises(NotContracting):
        poisson_transform(phi_star(), AffineReal.identity(2), mu, 10, 0)
