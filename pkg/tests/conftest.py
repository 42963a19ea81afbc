import dataclasses

import numpy as np
import pytest

from chartbeam import scene as sc


@pytest.fixture(scope="session")
def base_scene():
    return sc.default_scene(num_users=200, rng_seed=7)


@pytest.fixture(scope="session")
def los_only_scene(base_scene):
    """Free-space scene: no walls, no ground, no obstacles."""
    return dataclasses.replace(base_scene, wall_planes_y=None,
                               ground_height=None, obstacles=())


@pytest.fixture(scope="session")
def compact_scene(base_scene):
    """Small dense region so charting stays connected at U=200."""
    return dataclasses.replace(
        base_scene,
        bs_positions=((20.0, 2.0, 8.0), (55.0, 18.0, 8.0)),
        obstacles=(sc.Obstacle(axis="y", coord=14.0, lo=42.0, hi=50.0,
                               z_lo=5.6, z_hi=6.5),),
        user_region=(25.0, 55.0, 6.0, 12.0),
        num_users=200,
    )


@pytest.fixture(scope="session")
def compact_dataset(compact_scene):
    return sc.generate_dataset(compact_scene)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_channels(rng, n, length):
    h = rng.standard_normal((n, length)) + 1j * rng.standard_normal((n, length))
    return h
