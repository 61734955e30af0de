"""Shared fixtures: test signals are built once per session."""

import numpy as np
import pytest

from hwave.numerics import Grid1D
from hwave.signals import build_signal


@pytest.fixture(scope="session")
def gauss2d():
    """Normalized Gaussian sqrt(2) exp(-pi (x^2 + y^2)) on [-8, 8]^2, step 1/16."""
    return build_signal({"builder": "gaussian2d", "params": {}, "normalize": True})


@pytest.fixture(scope="session")
def gauss3d():
    """Normalized separable Gaussian on [-6, 6]^3, step 1/8."""
    g = Grid1D.symmetric(6.0, 1 / 8)
    return build_signal({"builder": "gaussian3d", "params": {}, "normalize": True},
                        grids=[g, g, g])


@pytest.fixture(scope="session")
def gauss3d_default():
    """Normalized separable Gaussian on the default grid [-8, 8]^3, step 1/16."""
    return build_signal({"builder": "gaussian3d", "params": {}, "normalize": True})


@pytest.fixture(scope="session")
def phi_box():
    """Generator whose kernel is the indicator of the unit square."""
    return build_signal({"builder": "box_kernel_phi", "params": {}, "normalize": False})


@pytest.fixture(scope="session")
def profile_psi():
    """Lambda-profile generator with c(lam) = lam^(-1/2), lam_min = 1/64."""
    return build_signal({"builder": "lambda_profile_psi", "params": {"lam_min": 1 / 64}})


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# ---------------------------------------------------------------------------
# Acceptance criteria: one PASS/FAIL line per criterion in the terminal summary
# ---------------------------------------------------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "states": []})
    if hasattr(rep, "wasxfail"):
        entry["states"].append("xfail")
    else:
        entry["states"].append(rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        states = e["states"]
        if all(s == "passed" for s in states):
            verdict = "PASS"
        elif "failed" in states:
            verdict = "FAIL"
        elif "xfail" in states:
            verdict = "FAIL (known unattainable part, strict xfail)"
        else:
            verdict = "FAIL (skipped)"
        terminalreporter.write_line(f"criterion {n:2d}: {verdict:45s} {e['title']}")
