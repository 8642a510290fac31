import numpy as np
import pytest

from nlneumann import Domain, FracParams, build_grid


@pytest.fixture
def unit():
    return Domain.interval(0.0, 1.0)


@pytest.fixture
def disk():
    return Domain.disk((0.0, 0.0), 1.0)


@pytest.fixture(params=[0.3, 0.5, 0.7], ids=lambda s: f"s={s}")
def params(request):
    return FracParams(request.param)


@pytest.fixture
def grid32(unit):
    return build_grid(unit, 1 / 32)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one summary line per acceptance criterion, printed after the run

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    detail = dict(item.user_properties).get("detail", "")
    _CRITERIA[mark.args[0]] = ("PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}")
