import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record a named acceptance check; the summary prints one line per criterion."""

    def record(name, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"[{status}] {name}: {detail}")
        assert passed, f"{name}: {detail}"

    return record


def pytest_runtest_logreport(report):
    if report.skipped and "test_acceptance" in report.nodeid and report.when == "setup":
        reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else str(report.longrepr)
        name = report.nodeid.split("::")[-1]
        ACCEPTANCE_LINES.append(f"[SKIP] {name}: {reason.removeprefix('Skipped: ')}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
