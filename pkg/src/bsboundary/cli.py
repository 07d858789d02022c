"""Command line entry point: ``bsboundary <command> --config FILE --seed S ...``.

Exit codes: 0 success, 1 a statistical acceptance check failed, 2 bad
configuration or arguments, 3 numerical or precision failure.

Every command that writes ``--out FILE`` also writes ``FILE.manifest.json``
holding the config hash, seed, parameters and library versions.  Neither the
artifact nor the manifest depends on ``--workers`` or on the wall clock.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import platform
import sys
from fractions import Fraction
from importlib import metadata
from pathlib import Path

from bsboundary.affine import AffineReal
from bsboundary.errors import (
    ConfigError,
    DegenerateBoundary,
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
    phi_star,
    poisson_transform,
    worked_example_table,
)
from bsboundary.measure import (
    StepMeasure,
    boundary_drifts,
    boundary_spectrum,
    drift_inf,
    drift_p,
    parse_measure,
)
from bsboundary.padic import PAdicRational, TruncatedPAdic, truncate
from bsboundary.solenoid import project
from bsboundary.verify import SUITES, VerifyConfig, report_json, verify_all
from bsboundary.walk import (
    DEFAULT_MAX_STEPS,
    DEFAULT_WINDOW,
    CertificationPolicy,
    boundary_batch,
    run_walk,
)

EXIT_OK, EXIT_STAT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

# commands that draw random numbers and therefore need a seed
_STOCHASTIC = {
    "walk",
    "sample-boundary",
    "nu-tilde",
    "estimate",
    "verify-harmonic",
    "example-table",
    "verify-all",
}
# parameters that never change an output value
_NOT_RECORDED = {"workers", "out", "command", "config"}


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _fmt(v)
    return str(v)


def _to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(rows[0].keys())
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row.values()])
    return buf.getvalue()


def _to_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for dist in ("artifact", "numpy", "scipy", "sympy"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = "unknown"
    return out


class _Run:
    """Loaded configuration plus the resolved seed."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        if args.config is None:
            raise ConfigError("--config is required")
        path = Path(args.config)
        try:
            self.config_bytes = path.read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        self.measure, self.settings = parse_measure(self.config_bytes.decode("utf-8"))
        seed = args.seed if args.seed is not None else self.settings.get("seed")
        if seed is not None:
            try:
                seed = int(seed)
            except ValueError as exc:
                raise ConfigError(f"seed must be an integer, got {seed!r}") from exc
            if seed < 0:
                raise ConfigError("seed must be non-negative")
        if seed is None and args.command in _STOCHASTIC:
            raise ConfigError("a seed is required (--seed or a 'seed' line in the config)")
        self.seed = seed

    @property
    def bs_measure(self) -> StepMeasure:
        if not isinstance(self.measure, StepMeasure):
            raise ConfigError(f"'{self.args.command}' needs a BS(1,p) measure with a prime line")
        return self.measure

    def manifest(self, output: str) -> dict:
        params = {
            k: v for k, v in sorted(vars(self.args).items()) if k not in _NOT_RECORDED
        }
        params["seed"] = self.seed
        return {
            "command": self.args.command,
            "config_sha256": hashlib.sha256(self.config_bytes).hexdigest(),
            "config": self.config_bytes.decode("utf-8"),
            "seed": self.seed,
            "parameters": params,
            "output_sha256": hashlib.sha256(output.encode("utf-8")).hexdigest(),
            "versions": _versions(),
        }

    def emit(self, text: str) -> None:
        out = self.args.out
        if out is None:
            sys.stdout.write(text)
            return
        Path(out).write_text(text, encoding="utf-8")
        Path(str(out) + ".manifest.json").write_text(_to_json(self.manifest(text)), encoding="utf-8")

    def emit_rows(self, rows: list[dict], payload=None) -> None:
        if self.args.format == "json":
            self.emit(_to_json(payload if payload is not None else rows))
        else:
            self.emit(_to_csv(rows))

    def policy(self) -> CertificationPolicy:
        return CertificationPolicy(
            window=self.args.window,
            slack=self.args.slack,
            conservative=not self.args.no_conservative,
        )


def _real(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a real number: {text!r}") from exc


def _padic_arg(text: str, p: int, digits: int) -> TruncatedPAdic:
    """``x`` given as a rational (``3/4``, ``5/2^3``) or a digit string."""
    if text.startswith("p="):
        try:
            x = TruncatedPAdic.parse(text)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if x.p != p:
            raise ConfigError(f"x is over prime {x.p}, config uses {p}")
        return x
    try:
        r = PAdicRational.parse(text, p)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return truncate(r, digits)


def _observable(text: str):
    """``phi-star``, ``const:<v>`` or ``cylinder:<digits>@<start>``."""
    if text == "phi-star":
        return phi_star()
    if text.startswith("const:"):
        return ConstantObservable(float(text.split(":", 1)[1]))
    if text.startswith("cylinder:"):
        spec = text.split(":", 1)[1]
        pattern, _, start = spec.partition("@")
        return CylinderObservable(tuple(int(c) for c in pattern), int(start or 0))
    raise ConfigError(f"unknown observable {text!r}")


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------


def cmd_drift(run: _Run) -> int:
    mu = run.measure
    drifts = [drift_p(mu), drift_inf(mu)] if isinstance(mu, StepMeasure) else boundary_drifts(mu)
    rows = [_drift_row(d) for d in drifts]
    sys.stdout.write(_to_json(rows))
    if run.args.out:
        run.emit(_to_json(rows))
    return EXIT_OK


def _drift_row(d) -> dict:
    return {k: d.as_dict()[k] for k in ("place", "exact_coeff", "float_value")}


def cmd_spectrum(run: _Run) -> int:
    pick = _drift_row
    payload = {
        "drifts": [pick(d) for d in boundary_drifts(run.measure)],
        "spectrum": [pick(d) for d in boundary_spectrum(run.measure)],
    }
    sys.stdout.write(_to_json(payload))
    if run.args.out:
        run.emit(_to_json(payload))
    return EXIT_OK


def cmd_walk(run: _Run) -> int:
    walk = run_walk(run.bs_measure, run.args.n if run.args.n is not None else 100, run.seed)
    rows = [
        {
            "k": k,
            "step_b": str(walk.steps[k - 1].b) if k else "",
            "step_m": walk.steps[k - 1].m if k else "",
            "b": str(r.b),
            "m": r.m,
        }
        for k, r in enumerate(walk.partials)
    ]
    run.emit_rows(rows)
    return EXIT_OK


def cmd_sample_boundary(run: _Run) -> int:
    a = run.args
    batch = boundary_batch(
        run.bs_measure,
        a.n if a.n is not None else 1000,
        run.seed,
        a.digits,
        run.policy(),
        a.max_steps,
        workers=a.workers,
    )
    run.emit_rows([s.as_row() for s in batch])
    return EXIT_OK


def cmd_project(run: _Run) -> int:
    a = run.args
    mu = run.bs_measure
    g = AffineReal(_real(a.b), a.m, mu.p)
    x = _padic_arg(a.x, mu.p, a.digits)
    res = project(g, x, degenerate_tol=a.degenerate_tol)
    payload = {
        "point": res.point.to_json(),
        "gamma": [str(res.gamma.b), res.gamma.m],
    }
    if a.format == "csv":
        run.emit(
            _to_csv(
                [
                    {
                        "x_inf": float(res.point.x_inf),
                        "x_p": str(res.point.x_p),
                        "gamma_b": str(res.gamma.b),
                        "gamma_m": res.gamma.m,
                    }
                ]
            )
        )
    else:
        run.emit(_to_json(payload))
    return EXIT_OK


def cmd_nu_tilde(run: _Run) -> int:
    a = run.args
    mu = run.bs_measure
    e = AffineReal.identity(mu.p)
    batch = boundary_batch(
        mu, a.n if a.n is not None else 1000, run.seed, a.digits, run.policy(), a.max_steps, a.workers
    )
    points = [project(e, s.value).point.to_json() for s in batch]
    run.emit_rows(points)
    return EXIT_OK


def cmd_estimate(run: _Run) -> int:
    a = run.args
    mu = run.bs_measure
    g = AffineReal(_real(a.b), a.m, mu.p)
    est = poisson_transform(
        _observable(a.observable),
        g,
        mu,
        a.n if a.n is not None else 100_000,
        run.seed,
        a.digits,
        a.degenerate_tol,
        a.workers,
    )
    row = {"b": float(g.b), "m": g.m, **est.as_dict()}
    run.emit_rows([row], row)
    return EXIT_OK


def cmd_verify_harmonic(run: _Run) -> int:
    a = run.args
    mu = run.bs_measure
    g = AffineReal(_real(a.b), a.m, mu.p)
    report = check_harmonicity(
        _observable(a.observable),
        g,
        mu,
        a.n if a.n is not None else 100_000,
        run.seed,
        a.digits,
        degenerate_tol=a.degenerate_tol,
        workers=a.workers,
    )
    run.emit_rows([report.as_dict()], report.as_dict())
    return EXIT_OK if report.passed else EXIT_STAT


def cmd_example_table(run: _Run) -> int:
    a = run.args
    mu = run.bs_measure
    grid = [_real(t) for t in a.b_grid.split(",") if t.strip()]
    rows = worked_example_table(
        mu,
        grid,
        range(a.m_min, a.m_max + 1),
        a.n if a.n is not None else 100_000,
        run.seed,
        a.digits,
    )
    run.emit_rows([r.as_dict() for r in rows])
    return EXIT_OK if all(r.passed for r in rows) else EXIT_STAT


def cmd_verify_all(run: _Run) -> int:
    a = run.args
    overrides = {"digits": a.digits, "workers": a.workers}
    cfg = VerifyConfig.quick(run.seed, **overrides) if a.quick else VerifyConfig(run.seed, **overrides)
    suites = a.suites.split(",") if a.suites else None
    if suites and any(s not in SUITES for s in suites):
        raise ConfigError(f"unknown suite; choose from {', '.join(SUITES)}")
    report = verify_all(run.bs_measure, cfg, suites)
    run.emit(report_json(report))
    return EXIT_OK if report["all_passed"] else EXIT_STAT


COMMANDS = {
    "drift": cmd_drift,
    "spectrum": cmd_spectrum,
    "walk": cmd_walk,
    "sample-boundary": cmd_sample_boundary,
    "project": cmd_project,
    "nu-tilde": cmd_nu_tilde,
    "estimate": cmd_estimate,
    "verify-harmonic": cmd_verify_harmonic,
    "example-table": cmd_example_table,
    "verify-all": cmd_verify_all,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="measure file (see README for the format)")
    common.add_argument("--seed", type=int, help="master seed (or a 'seed' line in the config)")
    common.add_argument("--n", type=int, help="sample count or walk length")
    common.add_argument("--digits", type=int, default=8, help="p-adic precision")
    common.add_argument("--out", help="output file; a .manifest.json is written next to it")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    common.add_argument("--slack", type=int, default=None, help="certification slack in digits")
    common.add_argument(
        "--no-conservative", action="store_true", help="certify on the window test alone"
    )
    common.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    common.add_argument("--degenerate-tol", type=float, default=0.0)

    parser = argparse.ArgumentParser(prog="bsboundary", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("drift", "spectrum", "walk", "sample-boundary", "nu-tilde"):
        sub.add_parser(name, parents=[common])

    p = sub.add_parser("project", parents=[common])
    p.add_argument("--b", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--x", required=True, help="rational such as 3/4 or 'p=2 v=-1 digits=1,0,1'")

    for name in ("estimate", "verify-harmonic"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--b", required=True)
        p.add_argument("--m", type=int, required=True)
        p.add_argument("--observable", default="phi-star")

    p = sub.add_parser("example-table", parents=[common])
    p.add_argument("--b-grid", default="0.25,0.5,0.75,1.5")
    p.add_argument("--m-min", type=int, default=1)
    p.add_argument("--m-max", type=int, default=8)

    p = sub.add_parser("verify-all", parents=[common])
    p.add_argument("--quick", action="store_true", help="reduced sample sizes")
    p.add_argument("--suites", help="comma-separated subset of suites")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        run = _Run(args)
        return COMMANDS[args.command](run)
    except (ConfigError, InvalidMeasure, NotContracting, PrimeMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PrecisionError, DegenerateBoundary, MaxStepsExceeded) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
