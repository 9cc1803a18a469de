import numpy as np
import pytest

from shellvar import flat_faces, superball, two_block, unit_ball

# acceptance results, printed as one line per criterion at the end of the run
CRITERIA: dict[int, tuple[bool, str]] = {}


def record(k: int, ok: bool, detail: str):
    CRITERIA[k] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def sb():
    return superball(4, 3)


@pytest.fixture(scope="session")
def tb():
    return two_block()


@pytest.fixture(scope="session")
def ff():
    return flat_faces()


@pytest.fixture(scope="session")
def sphere():
    return unit_ball(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
