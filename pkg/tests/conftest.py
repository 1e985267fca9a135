import os

import pytest

from weilpos.cache import ResultCache
from weilpos.pipeline import Pipeline


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("cache")


@pytest.fixture(scope="session")
def pipe(cache_dir):
    return Pipeline(ResultCache(cache_dir))


@pytest.fixture(scope="session")
def basis(pipe):
    return pipe.basis


@pytest.fixture(scope="session")
def approx(pipe):
    return pipe.approximant()


@pytest.fixture(scope="session")
def eps_prime(pipe):
    return pipe.eps_prime


@pytest.fixture(scope="session")
def extended():
    # the omega=1/5000 and N=10000 runs take a few minutes on one core
    return os.environ.get("WEILPOS_QUICK", "") == ""


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def report_line():
    return ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance checks")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
