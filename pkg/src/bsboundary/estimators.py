"""scikit-learn style wrappers.

``BoundarySampler`` fits the stationary boundary law of a step measure;
``PoissonTransform`` turns a fitted sample set into a predictor of the
harmonic function ``f(b, p^m)``.  Inputs to ``predict``/``transform`` are
arrays with one ``(b, m)`` row per group element.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from bsboundary.affine import AffineReal
from bsboundary.harmonic import BoundaryObservable, phi_star
from bsboundary.measure import StepMeasure, load_measure
from bsboundary.solenoid import project
from bsboundary.walk import CertificationPolicy, boundary_batch


def _as_measure(mu) -> StepMeasure:
    if isinstance(mu, StepMeasure):
        return mu
    if isinstance(mu, (str, Path)):
        measure, _ = load_measure(mu)
        if isinstance(measure, StepMeasure):
            return measure
    raise TypeError("expected a StepMeasure or a path to a BS(1,p) measure file")


def _group_rows(X) -> np.ndarray:
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != 2:
        raise ValueError(f"expected rows (b, m), got {X.shape[1]} columns")
    if not np.all(X[:, 1] == np.round(X[:, 1])):
        raise ValueError("the exponent column m must be integral")
    return X


class BoundarySampler(BaseEstimator):
    """Draw boundary samples of a step measure.

    Parameters
    ----------
    n_samples : int
        Batch size.
    digits : int
        Absolute p-adic precision of every sample.
    seed : int
        Master seed; sample ``i`` uses a seed derived from it.
    window, slack, conservative :
        Digit certification settings, see :class:`CertificationPolicy`.
    """

    def __init__(
        self,
        n_samples: int = 10_000,
        digits: int = 8,
        seed: int = 0,
        window: int = 32,
        slack: int | None = None,
        conservative: bool = True,
        workers: int = 1,
    ):
        self.n_samples = n_samples
        self.digits = digits
        self.seed = seed
        self.window = window
        self.slack = slack
        self.conservative = conservative
        self.workers = workers

    def fit(self, mu, y=None):
        self.measure_ = _as_measure(mu)
        policy = CertificationPolicy(self.window, self.slack, self.conservative)
        self.samples_ = boundary_batch(
            self.measure_, self.n_samples, self.seed, self.digits, policy, workers=self.workers
        )
        self.values_ = [s.value for s in self.samples_]
        return self

    def cylinder_mass(self, threshold: int) -> tuple[float, float]:
        """Fraction of samples with valuation at least ``threshold``, with stderr."""
        check_is_fitted(self, "samples_")
        hits = np.array([x.valuation_at_least(threshold) for x in self.values_], dtype=float)
        est = float(hits.mean())
        return est, float(np.sqrt(est * (1 - est) / len(hits)))


class PoissonTransform(TransformerMixin, BaseEstimator):
    """Harmonic function of a boundary observable, estimated on fitted samples.

    ``transform`` returns the per-sample observable values (one column per
    sample), ``predict`` their mean, i.e. the estimate of ``f(b, p^m)``.
    """

    def __init__(
        self,
        observable: BoundaryObservable | None = None,
        n_samples: int = 10_000,
        digits: int = 8,
        seed: int = 0,
        workers: int = 1,
    ):
        self.observable = observable
        self.n_samples = n_samples
        self.digits = digits
        self.seed = seed
        self.workers = workers

    def fit(self, mu, y=None):
        sampler = BoundarySampler(
            n_samples=self.n_samples, digits=self.digits, seed=self.seed, workers=self.workers
        ).fit(mu)
        self.measure_ = sampler.measure_
        self.values_ = sampler.values_
        self.observable_ = self.observable if self.observable is not None else phi_star()
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "values_")
        X = _group_rows(X)
        p = self.measure_.p
        out = np.empty((X.shape[0], len(self.values_)))
        for r, (b, m) in enumerate(X):
            g = AffineReal(float(b), int(m), p)
            out[r] = [self.observable_(project(g, x).point) for x in self.values_]
        return out

    def predict(self, X) -> np.ndarray:
        return self.transform(X).mean(axis=1)

    def predict_stderr(self, X) -> np.ndarray:
        vals = self.transform(X)
        n = vals.shape[1]
        return vals.std(axis=1, ddof=1) / np.sqrt(n)
