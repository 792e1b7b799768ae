import pytest

from planewave.scenarios import load_benchmark, prepare_case, reference_kappa


@pytest.fixture(scope="session")
def wscc9():
    return load_benchmark("wscc9")


@pytest.fixture(scope="session")
def ne39():
    return load_benchmark("ne39")


@pytest.fixture(scope="session")
def kappa(wscc9):
    return reference_kappa(wscc9)


@pytest.fixture(scope="session")
def prep9(wscc9):
    return prepare_case(wscc9)


@pytest.fixture(scope="session")
def prep39(ne39):
    return prepare_case(ne39)


# ---------------------------------------------------------------- acceptance report

_ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def record():
    """record(criterion, check, ok, detail): one sub-check of an acceptance criterion."""
    def _record(criterion: int, check: str, ok: bool, detail: str) -> bool:
        _ACCEPTANCE.setdefault(criterion, []).append((check, bool(ok), detail))
        return bool(ok)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(_ACCEPTANCE):
        checks = _ACCEPTANCE[c]
        verdict = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        detail = "; ".join(f"{name}: {d} [{'ok' if ok else 'fail'}]" for name, ok, d in checks)
        terminalreporter.write_line(f"C{c} {verdict} | {detail}")
