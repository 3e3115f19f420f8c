import pytest
from hypothesis import settings

# cell-level oracles are slow; wall-clock deadlines only add flakiness
settings.register_profile("default", deadline=None)
settings.load_profile("default")

_criteria: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one acceptance verdict line; returns the verdict so tests can assert on it."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _criteria[number] = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        terminalreporter.write_line(_criteria[n])
