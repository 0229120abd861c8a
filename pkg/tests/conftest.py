import numpy as np
import pytest

from bb2rom.fileio import coefficients_from_dict
from bb2rom.samples import synthetic_coefficients, synthetic_hull
from bb2rom.simulator import Plant


@pytest.fixture(scope="session")
def coeffs():
    return coefficients_from_dict(synthetic_coefficients())


@pytest.fixture(scope="session")
def hull():
    return synthetic_hull()


@pytest.fixture
def plant(coeffs):
    return Plant(coeffs)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    # One line per acceptance criterion, in criterion order.
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" not in getattr(rep, "nodeid", "") or rep.when != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((props["criterion"], "PASS" if rep.passed else "FAIL",
                              props.get("title", ""), props.get("detail", "")))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for num, status, title, detail in sorted(lines):
            terminalreporter.write_line(f"criterion {num:2d} {status}  {title}  {detail}")
