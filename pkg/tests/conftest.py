import numpy as np
import pytest

from tsfp.config import toy_model_config
from tsfp.data import synthetic_dataset
from tsfp.model import TSFPNet
from tsfp.tensor import precision


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def f64():
    with precision("float64"):
        yield


@pytest.fixture(scope="session")
def toy_config():
    return toy_model_config()


@pytest.fixture
def toy_model(toy_config):
    return TSFPNet.init(toy_config, seed=0)


@pytest.fixture(scope="session")
def toy_videos():
    return synthetic_dataset(3, 8, 32, 64, seed=7)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for the acceptance summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
