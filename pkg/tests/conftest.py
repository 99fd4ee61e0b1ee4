import numpy as np
import pytest

from bhpfit.bhp import build_table


@pytest.fixture(scope="session")
def table():
    return build_table(10, "right-skew")


@pytest.fixture(scope="session")
def left_table():
    return build_table(10, "left-skew")


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path_factory, monkeypatch):
    monkeypatch.setenv("BHPFIT_CACHE_DIR", str(tmp_path_factory.getbasetemp() / "bhp-cache"))


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is not None and module.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in module.VERDICTS:
            terminalreporter.write_line(line)
