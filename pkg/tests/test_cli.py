from __future__ import annotations

import csv
import io
import json
import math

import pytest

from bsboundary import cli
from bsboundary.harmonic import HarmonicityReport


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_drift_prints_exact_coefficients(capsys, config_dir):
    code, out, _ = run(capsys, "drift", "--config", str(config_dir / "mu_star.txt"))
    assert code == 0
    rows = json.loads(out)
    assert rows[0] == {
        "place": "2",
        "exact_coeff": "-1/3",
        "float_value": pytest.approx(-math.log(2) / 3, rel=1e-15),
    }
    assert rows[1]["place"] == "inf" and rows[1]["exact_coeff"] == "1/3"


def test_spectrum_of_rational_measure(capsys, config_dir):
    code, out, _ = run(capsys, "spectrum", "--config", str(config_dir / "rational_example.txt"))
    payload = json.loads(out)
    assert code == 0
    assert [d["place"] for d in payload["spectrum"]] == ["3"]
    assert {d["place"]: d["exact_coeff"] for d in payload["drifts"]} == {
        "2": "1/3",
        "3": "-1/3",
        "inf": "1/3",
    }


def test_missing_seed_exits_2(capsys, tmp_path, config_dir):
    text = (config_dir / "mu_star.txt").read_text().replace("seed 2024", "")
    cfg = tmp_path / "noseed.txt"
    cfg.write_text(text)
    code, _, err = run(capsys, "sample-boundary", "--config", str(cfg), "--n", "2")
    assert code == 2 and "seed" in err


def test_config_errors_exit_2(capsys, tmp_path, config_dir):
    assert run(capsys, "sample-boundary", "--config", str(config_dir / "corrupted.txt"), "--seed", "1")[0] == 2
    assert run(capsys, "drift", "--config", str(tmp_path / "missing.txt"))[0] == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("prime 2\natom b=0 m=oops w=1\n")
    assert run(capsys, "drift", "--config", str(bad))[0] == 2
    # a measure that does not contract on Q_p cannot drive the sampler
    flipped = tmp_path / "flipped.txt"
    flipped.write_text("prime 2\natom b=1 m=-1 w=2/3\natom b=0 m=1 w=1/3\n")
    assert run(capsys, "sample-boundary", "--config", str(flipped), "--seed", "1")[0] == 2
    assert run(capsys, "walk", "--config", str(config_dir / "rational_example.txt"), "--seed", "1")[0] == 2


def test_precision_error_exits_3(capsys, config_dir):
    code, _, err = run(
        capsys, "project", "--config", str(config_dir / "mu_star.txt"),
        "--b", "0.3", "--m", "0", "--x", "1/2", "--digits", "0",
    )
    assert code == 3 and "numerical" in err
    code, _, _ = run(
        capsys, "project", "--config", str(config_dir / "mu_star.txt"),
        "--b", "1/2", "--m", "0", "--x", "1/2", "--degenerate-tol", "1e-9",
    )
    assert code == 3


def test_project_json(capsys, config_dir):
    code, out, _ = run(
        capsys, "project", "--config", str(config_dir / "mu_star.txt"),
        "--b", "0.3", "--m", "0", "--x", "1/2", "--format", "json",
    )
    payload = json.loads(out)
    assert code == 0
    assert payload["gamma"] == ["-1/2^1", 0]
    assert payload["point"]["x_inf"] == pytest.approx(0.8)
    code, out, _ = run(
        capsys, "project", "--config", str(config_dir / "mu_star.txt"),
        "--b", "1.7", "--m", "0", "--x", "p=2 v=0 digits=0,0,0,0",
    )
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["gamma_b"] == "1/2^0" and row["x_p"] == "p=2 v=0 digits=1,0,0,0"


def test_sample_boundary_csv_and_manifest(capsys, tmp_path, config_dir):
    out = tmp_path / "z.csv"
    code, _, _ = run(
        capsys, "sample-boundary", "--config", str(config_dir / "mu_star.txt"),
        "--n", "5", "--digits", "6", "--seed", "3", "--out", str(out),
    )
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["seed", "steps_used", "v", "digits", "certified_digits"]
    assert len(rows) == 5 and all(r["certified_digits"] == "6" for r in rows)
    manifest = json.loads((tmp_path / "z.csv.manifest.json").read_text())
    assert manifest["seed"] == 3 and manifest["command"] == "sample-boundary"
    assert set(manifest["versions"]) >= {"python", "numpy", "artifact"}
    assert "workers" not in manifest["parameters"]
    assert len(manifest["config_sha256"]) == 64


def test_walk_and_nu_tilde(capsys, config_dir):
    code, out, _ = run(capsys, "walk", "--config", str(config_dir / "mu_star.txt"), "--n", "4")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 5 and rows[0]["b"] == "0/2^0"
    code, out, _ = run(
        capsys, "nu-tilde", "--config", str(config_dir / "mu_star.txt"), "--n", "4", "--format", "json"
    )
    pts = json.loads(out)
    assert code == 0 and len(pts) == 4 and all(0 <= p["x_inf"] < 1 for p in pts)


def test_estimate_and_float_format(capsys, config_dir):
    code, out, _ = run(
        capsys, "estimate", "--config", str(config_dir / "mu_star.txt"),
        "--b", "0.5", "--m", "1", "--n", "500",
    )
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert row["value"] == format(float(row["value"]), ".17g")
    assert float(row["stderr"]) > 0


def test_example_table_is_byte_identical(capsys, tmp_path, config_dir):
    args = [
        "example-table", "--config", str(config_dir / "mu_star.txt"),
        "--n", "800", "--m-max", "3",
    ]
    outs = []
    for name in ("a.csv", "b.csv"):
        code, _, _ = run(capsys, *args, "--out", str(tmp_path / name))
        assert code == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    header = outs[0].decode().splitlines()[0].split(",")
    assert header[:7] == ["b", "m", "estimate", "stderr", "lower_bound", "upper_bound", "pass"]
    assert (tmp_path / "a.csv.manifest.json").read_text().replace("a.csv", "") == (
        tmp_path / "b.csv.manifest.json"
    ).read_text().replace("b.csv", "")


def test_statistical_failure_exits_1(capsys, config_dir, monkeypatch):
    failed = HarmonicityReport("g", 0.0, 1.0, 1.0, 0.01, 0.03, False, 0, 10)
    monkeypatch.setattr(cli, "check_harmonicity", lambda *a, **k: failed)
    code, _, _ = run(
        capsys, "verify-harmonic", "--config", str(config_dir / "mu_star.txt"),
        "--b", "0.5", "--m", "0", "--n", "10",
    )
    assert code == 1


def test_verify_harmonic_passes(capsys, config_dir):
    code, out, _ = run(
        capsys, "verify-harmonic", "--config", str(config_dir / "mu_star.txt"),
        "--b", "0.5", "--m", "0", "--n", "4000", "--format", "json",
    )
    rep = json.loads(out)
    assert code == 0 and rep["passed"] and rep["exact_reduction_failures"] == 0


def test_verify_all_subset(capsys, config_dir):
    code, out, _ = run(
        capsys, "verify-all", "--config", str(config_dir / "mu_star.txt"),
        "--quick", "--suites", "drift_exactness,star_invariance",
    )
    report = json.loads(out)
    assert code == 0 and report["all_passed"]
    assert [s["name"] for s in report["suites"]] == ["drift_exactness", "star_invariance"]
    assert run(capsys, "verify-all", "--config", str(config_dir / "mu_star.txt"), "--suites", "nope")[0] == 2


def test_observable_parsing():
    assert cli._observable("const:2").value == 2.0
    cyl = cli._observable("cylinder:01@2")
    assert cyl.pattern == (0, 1) and cyl.start == 2
    with pytest.raises(cli.ConfigError):
        cli._observable("other")
