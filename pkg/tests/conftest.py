import pytest

from isac_handover.scenario import Scenario

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def s():
    return Scenario()


@pytest.fixture
def record():
    """Collect one pass/fail line per acceptance criterion."""

    def _record(cid: str, ok: bool, detail: str) -> bool:
        _ACCEPTANCE.append((cid, bool(ok), detail))
        print(f"[{'PASS' if ok else 'FAIL'}] {cid}: {detail}")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {cid}: {detail}")
