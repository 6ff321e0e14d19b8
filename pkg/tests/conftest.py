import itertools
from pathlib import Path

import pytest

from mutsamp.vectors import VectorSequence

FIXTURES = Path(__file__).parent / "fixtures"
BENCH_DIR = FIXTURES / "bench"
MHDL_DIR = FIXTURES / "mhdl"
TREND_DIR = FIXTURES / "trend"


def exhaustive(width):
    """All 2**width vectors, counting up with bit 0 of the counter last."""
    vecs = [tuple(bits) for bits in itertools.product((0, 1), repeat=width)]
    return VectorSequence(width, tuple(vecs), "exhaustive")


def seq(*rows):
    rows = [tuple(r) for r in rows]
    return VectorSequence(len(rows[0]) if rows else 0, tuple(rows))


@pytest.fixture
def fixtures_dir():
    return FIXTURES


# Acceptance criteria report one line each at the end of the run.
_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or report.failed:
        crit = marker.args[0]
        _ACCEPTANCE[crit] = _ACCEPTANCE.get(crit, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_ACCEPTANCE):
        status = "PASS" if _ACCEPTANCE[crit] else "FAIL"
        terminalreporter.write_line(f"criterion {crit}: {status}")
