import numpy as np
import pytest

from entropy_diagnostics import Grid, builtin, make_weierstrass

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        passed = report.passed
        prev = _ACCEPTANCE.get(number)
        if prev is not None:
            passed = passed and prev[1]
            detail = "; ".join(d for d in (prev[2], detail) if d)
        _ACCEPTANCE[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[number]
        line = f"[{'PASS' if passed else 'FAIL'}] {number}. {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def burgers():
    return builtin("burgers")


@pytest.fixture(scope="session")
def weierstrass_1d():
    """Weierstrass fields on a 2^16 periodic grid, keyed by alpha."""
    grid = Grid.periodic(2 ** 16)
    cache = {}

    def get(alpha, seed=7):
        if (alpha, seed) not in cache:
            cache[alpha, seed] = make_weierstrass(grid, alpha, seed=seed)
        return cache[alpha, seed]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
