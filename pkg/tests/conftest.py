import pytest

from smpctune import ParamGrid, SMPCEnv

_ACCEPTANCE: list[tuple[str, str, str]] = []


@pytest.fixture(scope="session")
def default_env():
    return SMPCEnv()


@pytest.fixture(scope="session")
def small_grid():
    return ParamGrid(rounds_axis=(1, 2), block_axis=(1, 2), sec_axis=(32, 64, 128))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = "PASS" if rep.passed else "FAIL"
        _ACCEPTANCE.append((marker.args[0], status, item.name))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, status, name in _ACCEPTANCE:
        terminalreporter.write_line(f"{status}  {crit:<9} {name}")
