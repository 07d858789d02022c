from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from bsboundary.measure import mu_star

settings.register_profile("default", deadline=None)
settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def mu2():
    return mu_star(2)


@pytest.fixture(scope="session")
def mu3():
    return mu_star(3)


@pytest.fixture(scope="session")
def config_dir() -> Path:
    return ROOT / "configs"


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: full-size acceptance criteria")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
        terminalreporter.write_line(line)
