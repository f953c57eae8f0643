import pytest

from switchdiff import build_model

from oracles import ACCEPTANCE_LINES, REFERENCE_MODEL


@pytest.fixture(scope="session")
def ref_model():
    return build_model(REFERENCE_MODEL)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
