import pytest

from thinrep.circle import choose_parameters, circle_ensemble
from thinrep.congruence import discover_Z
from thinrep.fixtures import FIXTURES
from thinrep.represent import precompose_fix

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=_criterion_key):
            terminalreporter.write_line(line)


def _criterion_key(line: str):
    head = line.split()[1]
    num = "".join(ch for ch in head if ch.isdigit())
    return (int(num) if num else 0, head)


@pytest.fixture
def accept():
    def record(criterion: str, ok: bool, detail: str):
        line = f"CRITERION {criterion} {'PASS' if ok else 'FAIL'} {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


@pytest.fixture(scope="session")
def l0101():
    return precompose_fix(FIXTURES["lubotzky3-01-01"])


@pytest.fixture(scope="session")
def l0175():
    return precompose_fix(FIXTURES["lubotzky3-01-75"])


@pytest.fixture(scope="session")
def gamma2():
    return FIXTURES["gamma2"]


@pytest.fixture(scope="session")
def small_params():
    return choose_parameters(2500)


@pytest.fixture(scope="session")
def ens0101(l0101, small_params):
    return circle_ensemble(l0101, small_params)


@pytest.fixture(scope="session")
def ens0175(l0175, small_params):
    return circle_ensemble(l0175, small_params)


@pytest.fixture(scope="session")
def report0101(l0101):
    return discover_Z(l0101)


@pytest.fixture(scope="session")
def report0175(l0175):
    return discover_Z(l0175)
