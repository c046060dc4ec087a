import pytest

from rsclass import hecke


@pytest.fixture(scope="session")
def trace_cache(tmp_path_factory):
    """One prime-trace cache per test session."""
    return tmp_path_factory.mktemp("traces")


@pytest.fixture(scope="session")
def table37(trace_cache):
    return hecke.build_table(hecke.CURVE_37A, 300_000, trace_cache)


@pytest.fixture(scope="session")
def table11(trace_cache):
    return hecke.build_table(hecke.CURVE_11A, 20_000, trace_cache)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    def _record(n: int, ok: bool, detail: str) -> bool:
        """Merge this check into criterion n; return this check's own outcome."""
        ok = bool(ok)
        prev = ACCEPTANCE.get(n)
        ACCEPTANCE[n] = (ok, detail) if prev is None else (prev[0] and ok, f"{prev[1]}; {detail}")
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  ({detail})")
