import pytest

from chiplet_cost import default_catalog


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def n7(catalog):
    return catalog.node("7nm")


@pytest.fixture(scope="session")
def n5(catalog):
    return catalog.node("5nm")


@pytest.fixture(scope="session")
def n14(catalog):
    return catalog.node("14nm")


@pytest.fixture(scope="session")
def soc(catalog):
    return catalog.tech("SoC")


@pytest.fixture(scope="session")
def mcm(catalog):
    return catalog.tech("MCM")


@pytest.fixture(scope="session")
def info(catalog):
    return catalog.tech("InFO")


@pytest.fixture(scope="session")
def info_first(catalog):
    return catalog.tech("InFO_chip_first")


@pytest.fixture(scope="session")
def si25d(catalog):
    return catalog.tech("2.5D")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
