from __future__ import annotations

import numpy as np
import pytest

from twinforge.abc.configs import SceneRecipe
from twinforge.synthgen.generator import Scene, generate


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "slow: long acceptance run, needs --runslow")


def pytest_collection_modifyitems(config: pytest.Config, items: list) -> None:
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def drawer_scene() -> Scene:
    return generate(SceneRecipe("drawer", states=[[0.05], [0.13]], spacing=0.02), render=False)


@pytest.fixture(scope="session")
def laptop_scene() -> Scene:
    return generate(SceneRecipe("laptop", states=[[0.8], [0.8 + np.radians(25.0)]], spacing=0.02), render=False)
