import numpy as np
import pytest

from travkit.geometry import CameraModel, Pose, Trajectory


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def camera():
    return CameraModel(fx=400.0, fy=420.0, cx=320.0, cy=240.0, width=640, height=480)


def random_rotation(rng):
    # QR of a Gaussian matrix gives a uniform-ish orthonormal basis.
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


def random_pose(rng, timestamp=0.0):
    return Pose(timestamp, random_rotation(rng), rng.normal(scale=2.0, size=3))


def straight_trajectory(n=10, dt=0.5, height=1.36, speed=1.0):
    poses = [
        Pose(i * dt, np.eye(3), np.array([speed * i * dt, 0.0, height]))
        for i in range(n)
    ]
    return Trajectory(tuple(poses))


def uniform_map(size=10.0):
    """Flat, fully observed, fully traversable map centered on the origin."""
    from travkit.gridmap import TravGridMap, geometric_traversability

    grid = TravGridMap(size=(size, size), origin=(-size / 2, -size / 2))
    grid.height[:] = 0.0
    grid.semantic[:] = 1.0
    geometric_traversability(grid)
    return grid


def corridor_map():
    """Two routes between side chambers: a short straight road corridor
    (semantic 0.25) and a longer sidewalk detour (semantic 1.0)."""
    from travkit.gridmap import TravGridMap

    grid = TravGridMap(origin=(-5.0, -5.0))
    grid.height[:] = 0.0
    grid.geometric[:] = 0.0  # blocked unless carved open
    grid.semantic[:] = 1.0

    def open_rect(x0, x1, y0, y1, sem):
        ix0, iy0 = grid.cell_of(x0, y0)
        ix1, iy1 = grid.cell_of(x1 - 1e-9, y1 - 1e-9)
        grid.geometric[iy0 : iy1 + 1, ix0 : ix1 + 1] = 1.0
        grid.semantic[iy0 : iy1 + 1, ix0 : ix1 + 1] = sem

    open_rect(-3.2, -2.2, -0.5, 0.5, 1.0)  # left chamber
    open_rect(2.2, 3.2, -0.5, 0.5, 1.0)  # right chamber
    open_rect(-2.5, 2.5, -0.35, 0.35, 0.25)  # short corridor over road
    open_rect(-3.2, -2.4, 0.5, 2.0, 1.0)  # sidewalk detour: up
    open_rect(-3.2, 3.2, 1.2, 2.0, 1.0)  # across
    open_rect(2.4, 3.2, 0.5, 2.0, 1.0)  # down
    return grid
