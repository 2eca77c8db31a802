import pytest

_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def criterion_log(pytestconfig):
    return pytestconfig.stash.setdefault(_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)
