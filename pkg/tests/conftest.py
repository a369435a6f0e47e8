import numpy as np
import pytest

from fockblocks import BlockEngine, FockSystem, ModelConfig


@pytest.fixture(scope="session")
def small_config():
    # two modes at +-0.4 so both g(k-q) and g(k+q) are nonzero everywhere
    return ModelConfig(
        d=1,
        m_b=1.0,
        m_f=1.3,
        p=0.5,
        grid_spacing=0.4,
        grid_halfwidth=0.4,
        boson_max=2,
        h1=0.9,
        h2=1.1,
        Lambda=1.0,
        z=-2.0 + 0.0j,
        grid_points=[[-0.4], [0.4]],
    )


@pytest.fixture(scope="session")
def small_system(small_config):
    return FockSystem.from_config(small_config)


@pytest.fixture(scope="session")
def engine(small_system):
    return BlockEngine(small_system)


@pytest.fixture(scope="session")
def deep_system(small_config):
    # boson cap 4: length-4 operator products never hit the truncation,
    # which makes matrix vacuum expectations agree with untruncated sums
    import dataclasses

    cfg = dataclasses.replace(small_config, boson_max=4)
    return FockSystem.from_config(cfg)
