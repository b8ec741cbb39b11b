import os

import pytest
from hypothesis import HealthCheck, settings

from model import DriveConfig, LevelSystem, MediumParams

settings.register_profile("fast", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long time-domain integrations")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def system():
    return LevelSystem()


@pytest.fixture
def drive():
    return DriveConfig()


@pytest.fixture
def medium():
    return MediumParams()


@pytest.fixture
def config_dir():
    return os.path.join(REPO_ROOT, "config")
