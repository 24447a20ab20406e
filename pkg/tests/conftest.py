import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from ckgdefense import fixture_path  # noqa: E402
from ckgdefense.kg import read_graph  # noqa: E402
from ckgdefense.rl.game import Game  # noqa: E402
from ckgdefense.rl.scenario import load_scenario  # noqa: E402

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def ckg():
    return read_graph(fixture_path("ckg.nt"))


@pytest.fixture(scope="session")
def scenario():
    return load_scenario(fixture_path("scenario.json"))


@pytest.fixture(scope="session")
def game(scenario):
    return Game(scenario)
