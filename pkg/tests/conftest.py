import importlib.util
import math
import os
import pathlib
import sys

import pytest

ROOT = pathlib.Path(__file__).resolve().parent.parent

if importlib.util.find_spec("dressing_core") is None:
    # running from a plain checkout: the repository root is the package
    _spec = importlib.util.spec_from_file_location(
        "dressing_core", ROOT / "__init__.py", submodule_search_locations=[str(ROOT)]
    )
    _module = importlib.util.module_from_spec(_spec)
    sys.modules["dressing_core"] = _module
    _spec.loader.exec_module(_module)

from dressing_core.lib.geometry import ARM_LENGTHS, JointAngles
from dressing_core.lib.policy import (
    synthetic_demo_corpus,
    train_policy,
    transform_demos,
)


@pytest.fixture(scope="session")
def mannequin():
    return ARM_LENGTHS["mannequin"]


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    """
    Directory for generated fixture files, DRESSING_FIXTURE_DIR if set.
    """
    path = os.environ.get("DRESSING_FIXTURE_DIR")
    if path:
        os.makedirs(path, exist_ok=True)
        return pathlib.Path(path)
    return tmp_path_factory.mktemp("fixtures")


@pytest.fixture(scope="session")
def corpus_policy(mannequin):
    """
    Policy trained on the default synthetic corpus: outer strategy below 120 degree,
    inner strategy above.
    """
    demos = synthetic_demo_corpus(mannequin, seed=0)
    return train_policy(transform_demos(demos), num_components=8, seed=0)


@pytest.fixture
def random_angles():
    """
    Draws joint angles away from the straight arm and the shoulder gimbal lock.
    """

    def draw(rng, phi_low=0.3, phi_high=math.pi - 0.3):
        return JointAngles(
            alpha=rng.uniform(-1.2, 1.2),
            beta=rng.uniform(-1.0, 1.0),
            phi=rng.uniform(phi_low, phi_high),
            gamma=rng.uniform(-3.0, 3.0),
        )

    return draw
