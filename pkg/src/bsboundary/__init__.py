"""Random walks on BS(1,p), their p-adic boundary and harmonic functions on the solenoid."""

from bsboundary.affine import (
    AffineExact,
    AffineReal,
    act_on_padic,
    act_on_real,
    compose,
    inverse,
)
from bsboundary.errors import (
    BoundaryError,
    ConfigError,
    DegenerateBoundary,
    InsufficientPrecision,
    InvalidMeasure,
    MaxStepsExceeded,
    NotContracting,
    PrecisionError,
    PrimeMismatchError,
)
from bsboundary.harmonic import (
    ConstantObservable,
    CylinderObservable,
    check_harmonicity,
    martingale_limit_probe,
    phi_star,
    poisson_transform,
    worked_example_table,
)
from bsboundary.measure import (
    RationalStepMeasure,
    StepMeasure,
    boundary_spectrum,
    drift_inf,
    drift_p,
    load_measure,
    mu_star,
    parse_measure,
    validate,
)
from bsboundary.padic import (
    PAdicRational,
    TruncatedPAdic,
    add_rational,
    frac_part_alpha,
    padic_norm,
    shift,
    truncate,
    vp,
)
from bsboundary.solenoid import (
    SolenoidPoint,
    act,
    fundamental_domain_uniqueness,
    project,
    sample_nu_tilde,
    star_invariance_check,
)
from bsboundary.walk import (
    CertificationPolicy,
    boundary_batch,
    estimate_cylinder_mass,
    run_walk,
    sample_boundary_padic,
    sample_boundary_real,
    sample_step,
)

__version__ = "0.1.0"

__all__ = [
    "AffineExact",
    "AffineReal",
    "BoundaryError",
    "CertificationPolicy",
    "ConfigError",
    "ConstantObservable",
    "CylinderObservable",
    "DegenerateBoundary",
    "InsufficientPrecision",
    "InvalidMeasure",
    "MaxStepsExceeded",
    "NotContracting",
    "PAdicRational",
    "PrecisionError",
    "PrimeMismatchError",
    "RationalStepMeasure",
    "SolenoidPoint",
    "StepMeasure",
    "TruncatedPAdic",
    "act",
    "act_on_padic",
    "act_on_real",
    "add_rational",
    "boundary_batch",
    "boundary_spectrum",
    "check_harmonicity",
    "compose",
    "drift_inf",
    "drift_p",
    "estimate_cylinder_mass",
    "frac_part_alpha",
    "fundamental_domain_uniqueness",
    "inverse",
    "load_measure",
    "martingale_limit_probe",
    "mu_star",
    "padic_norm",
    "parse_measure",
    "phi_star",
    "poisson_transform",
    "project",
    "run_walk",
    "sample_boundary_padic",
    "sample_boundary_real",
    "sample_nu_tilde",
    "sample_step",
    "shift",
    "star_invariance_check",
    "truncate",
    "validate",
    "vp",
    "worked_example_table",
]
