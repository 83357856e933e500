import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "fspec", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("fspec")


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path_factory, monkeypatch):
    monkeypatch.setenv("FSPEC_CACHE_DIR", str(tmp_path_factory.getbasetemp() / "cache"))
    yield


def pytest_report_header(config):
    return f"fspec tests; FSPEC_CACHE_DIR isolated per session (cpu count {os.cpu_count()})"


_ACCEPTANCE: dict[tuple[int, str], tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def record_criterion():
    """``record(n, passed, detail, case="")`` stores one summary line per criterion (and case)."""

    def record(n: int, passed: bool, detail: str, case: str = "") -> None:
        _ACCEPTANCE[(n, case)] = (bool(passed), detail)
        print(f"criterion {n}{case}: {'PASS' if passed else 'FAIL'} {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, case in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[(n, case)]
        terminalreporter.write_line(f"criterion {n}{case}: {'PASS' if passed else 'FAIL'}  {detail}")
