import os

import numpy as np
import pytest

from kinodyn.model import parse_model

ASSETS = os.path.normpath(os.path.join(os.path.dirname(__file__), os.pardir, "assets"))


def asset(*parts):
    return os.path.join(ASSETS, *parts)


def read(path):
    with open(path) as fh:
        return fh.read()


@pytest.fixture(scope="session")
def mini_biped():
    return parse_model(read(asset("models", "mini_biped.json")))


@pytest.fixture(scope="session")
def ironcub_like():
    return parse_model(read(asset("models", "ironcub_like.json")))


def random_configuration(model, rng, spread=1.0):
    """Configuration with a uniformly random base pose and in-range joints."""
    from kinodyn.kinematics import Configuration

    quat = rng.normal(size=4)
    quat /= np.linalg.norm(quat)
    s = np.array(
        [rng.uniform(lo, hi) for lo, hi in (j.limits for j in model.actuated_joints())]
    )
    return Configuration(
        base_pos=spread * rng.uniform(-1.0, 1.0, size=3),
        base_quat=quat,
        s=s,
    )


def random_velocity(model, rng, spread=1.0):
    from kinodyn.kinematics import Velocity

    return Velocity(
        base_lin=spread * rng.normal(size=3),
        base_ang=spread * rng.normal(size=3),
        s_dot=spread * rng.normal(size=model.n_dof),
    )
