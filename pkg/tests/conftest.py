import math

import pytest

from mincusum.model import PathConfig, Scenario, SensorModel


@pytest.fixture
def two_sensors():
    return [SensorModel(id=1, mu=1.0), SensorModel(id=2, mu=1.0)]


@pytest.fixture
def coarse_cfg():
    # cheap grid for structural tests; accuracy-sensitive tests build their own
    return PathConfig(dt=1e-2, horizon=400.0, seed=20240901)


def scenario_change_first(n=2):
    return Scenario(tuple([0.0] + [math.inf] * (n - 1)))
