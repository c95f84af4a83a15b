import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nvpair.config import Config
from nvpair.experiments import with_overrides

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def config():
    return Config()


@pytest.fixture
def weak_config():
    """Weakly coupled pair at low power: resolved hyperfine side dips in field sweeps."""
    return with_overrides(Config(), geometry={"r": 5.0})


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get(
        "tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[cid])
