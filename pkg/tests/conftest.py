import functools

import pytest

from sigmadimer.gates import GateProtocol, run_scheme1, run_scheme2

# Acceptance outcomes, filled by test_acceptance.py and printed at the end of the run.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    prev = ACCEPTANCE.get(criterion)
    if prev is not None:
        ok = ok and prev[0]
        detail = f"{prev[1]}; {detail}"
    ACCEPTANCE[criterion] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"CRITERION {k}: {'PASS' if ok else 'FAIL'} | {detail}")


@functools.lru_cache(maxsize=None)
def scheme2_report(control: int, amplitudes: tuple = (0.5, 0.5, 0.5, 0.5)):
    return run_scheme2(list(amplitudes), GateProtocol(control=control))


@functools.lru_cache(maxsize=None)
def scheme1_report(control: int = 2, amplitudes: tuple = (0.5, 0.5, 0.5, 0.5)):
    return run_scheme1(list(amplitudes), GateProtocol(scheme="I", control=control))


@pytest.fixture(scope="session")
def scheme2_control2():
    return scheme2_report(2)


@pytest.fixture(scope="session")
def scheme2_control1():
    return scheme2_report(1)


@pytest.fixture(scope="session")
def scheme1_control2():
    return scheme1_report(2)
