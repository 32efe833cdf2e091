import pytest

from horizonlab.spacetime import SpacetimeParams, build_charts, horizon_data


@pytest.fixture(scope="session")
def rnds():
    return SpacetimeParams.rnds(0.02, 1.0, 0.5)


@pytest.fixture(scope="session")
def rnds_hd(rnds):
    return horizon_data(rnds)


@pytest.fixture(scope="session")
def rnds_charts(rnds):
    return build_charts(rnds)


@pytest.fixture(scope="session")
def sds():
    return SpacetimeParams.rnds(0.02, 1.0, 0.0)


@pytest.fixture(scope="session")
def ds3():
    return SpacetimeParams.de_sitter(3.0)


ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record and print one PASS/FAIL line per acceptance criterion."""

    def record(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
        ACCEPTANCE[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
