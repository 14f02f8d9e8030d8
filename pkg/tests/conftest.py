from pathlib import Path

import pytest

from src.numerics import DEFAULT_TOLERANCES, Grid

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def tol():
    return DEFAULT_TOLERANCES


@pytest.fixture
def small_window():
    """Window of radius 4: same grid counts, finer steps, faster 2D sweeps."""
    return DEFAULT_TOLERANCES.replace(window_radius=4.0)


@pytest.fixture
def coarse_grid_2d():
    return Grid.window(2, 3.0, 61)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def clean_env():
    """An environment with no EPSKIT_* variables."""
    return {}
