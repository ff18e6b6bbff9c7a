# tests/conftest.py
import sys
from pathlib import Path

# Project root = parent of "tests" directory
ROOT = Path(__file__).resolve().parents[1]

# Ensure project root is on sys.path so "import src" works
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

import numpy as np
import pytest

from src.initial_data import Field, Grid


def gaussian_field(grid: Grid, amplitude: float = 1.0, width: float = 1.0) -> Field:
    """amplitude * exp(-|x|²/(2 width²)), well inside the box."""
    values = amplitude * np.exp(-grid.radius_squared / (2.0 * width**2)) + 0j
    return Field(values=values, grid=grid, epsilon=amplitude, family="gaussian")


@pytest.fixture
def line_grid() -> Grid:
    return Grid(d=1, M=256, L=32.0)


@pytest.fixture
def plane_grid() -> Grid:
    return Grid(d=2, M=64, L=16.0)
