import numpy as np
import pytest

from qiopa.dynamics import PRESETS, PolarizationQubit

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def reference_qubits():
    return [PRESETS["H"], PRESETS["D"], PRESETS["L"]]


def random_qubits(count, seed):
    gen = np.random.default_rng(seed)
    z = gen.normal(size=(count, 2)) + 1j * gen.normal(size=(count, 2))
    return [PolarizationQubit.normalized(a, b) for a, b in z]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    verdict = "PASS" if report.passed else "FAIL"
    ACCEPTANCE_LINES.append((number, f"criterion {number:2d} {verdict}  {title}  ({report.duration:.2f} s)"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
