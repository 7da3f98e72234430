"""Shared trajectories and the frozen oracle pins."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from bdlab.evolution import Trajectory
from bdlab.grid import build_disk_grid, build_halfspace_grid
from bdlab.problems import disk_mode, halfspace_mode, solve

PINS_PATH = Path(__file__).with_name("oracle_pins.json")


@pytest.fixture(scope="session")
def pins() -> dict:
    return json.loads(PINS_PATH.read_text())


@pytest.fixture(scope="session")
def mode32() -> Trajectory:
    """Exact half-space mode at h = 1/32, tau = 1/128 on t in [-1, 1]."""
    return solve(halfspace_mode(1 / 32, 1 / 128))


@pytest.fixture(scope="session")
def mode64() -> Trajectory:
    """One refinement of :func:`mode32`."""
    return solve(halfspace_mode(1 / 64, 1 / 256))


@pytest.fixture(scope="session")
def disk_coarse() -> Trajectory:
    """``exp(-t) r cos(theta)`` on the 17 x 64 disk, tau = 1/32, t in [0, 1]."""
    return solve(disk_mode(17, 64, 1 / 32))


def synthetic(grid, fn, times) -> Trajectory:
    """Trajectory with values ``fn(x1, x2, t)`` at every node and stamp."""
    x1, x2 = grid.points[:, 0], grid.points[:, 1]
    vals = np.array([np.broadcast_to(fn(x1, x2, t), x1.shape) for t in times], dtype=float)
    return Trajectory(grid, np.asarray(times, dtype=float), vals)


@pytest.fixture
def halfspace_axis():
    """Half-space grid R = 1, h = 1/16 with stamps covering (-1, 1)."""
    return build_halfspace_grid(1.0, 1 / 16), np.linspace(-1.0, 1.0, 33)


@pytest.fixture
def disk_small():
    return build_disk_grid(9, 32)
