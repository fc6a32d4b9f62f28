"""Shared fixtures: the desk-scale parameter set used across the suite."""

import pytest

from ultradiff.heat import HeatState
from ultradiff.landscape import normalize
from ultradiff.padic import SpaceParams


@pytest.fixture(scope="session")
def desk_space():
    return SpaceParams(p=2, n=1)


@pytest.fixture(scope="session")
def desk_params(desk_space):
    return normalize(desk_space, gamma=-0.5, c1=1.0)


@pytest.fixture(scope="session")
def desk_state(desk_params):
    return HeatState(desk_params)


@pytest.fixture(scope="session")
def state_p3n2():
    return HeatState(normalize(SpaceParams(p=3, n=2), gamma=-0.5, c1=1.0))
