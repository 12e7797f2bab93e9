import math

import pytest

from bsquick import (
    LaplacianSymbol,
    build_grid,
    forge_potential,
    region_indicator,
    top_eigenpair,
)
from bsquick.harness import SweepConfig

TUBE_EPSILON = 0.25


@pytest.fixture(scope="session")
def laplacian():
    return LaplacianSymbol()


@pytest.fixture(scope="session")
def square_grid():
    """Ящик `2 pi x 2 pi`: частоты решетки -- целые числа"""
    return build_grid(2, [2 * math.pi, 2 * math.pi], [9, 9])


@pytest.fixture(scope="session")
def tube_config():
    return SweepConfig(
        epsilons=[TUBE_EPSILON], record_timing=False, output_dir="unused"
    )


@pytest.fixture(scope="session")
def tube_region(tube_config):
    return tube_config.region_for(TUBE_EPSILON)


@pytest.fixture(scope="session")
def tube_grid(tube_config):
    return tube_config.grid_for(TUBE_EPSILON)


@pytest.fixture(scope="session")
def tube_indicator(tube_region, tube_grid):
    return region_indicator(tube_region, tube_grid)


@pytest.fixture(scope="session")
def tube_eigenpair(tube_indicator, laplacian):
    return top_eigenpair(tube_indicator, laplacian, 1.0, TUBE_EPSILON)


@pytest.fixture(scope="session")
def certificate(laplacian, tube_region, tube_eigenpair):
    return forge_potential(
        laplacian, 1.0, TUBE_EPSILON, tube_region, tube_eigenpair
    )
