import numpy as np
import pytest
from util import data_map, open_grid

from dissect.avnav.env.grid import AgentPose, load_map
from dissect.avnav.env.sensing import (
    GeometricMap,
    ray_angles,
    ray_cast_scan,
    update_geometric_map,
    walk_ray,
)


def test_ray_angles():
    assert list(ray_angles(90, 1, 90.0)) == [90.0]
    assert list(ray_angles(90, 3, 90.0)) == [45.0, 90.0, 135.0]
    with pytest.raises(ValueError):
        ray_angles(0, 0, 90.0)


def test_forward_ray_hits_wall():
    grid = data_map("corridor.map")
    scan = ray_cast_scan(grid, AgentPose((2, 1), 0), n_rays=1)

    assert scan.distances[0] == 5.0
    assert scan.hits[0]
    assert scan.steps[0] == 5


def test_ray_max_range():
    grid = load_map("#" * 14 + "\n#" + "." * 12 + "#\n" + "#" * 14)
    scan = ray_cast_scan(grid, AgentPose((1, 1), 0), n_rays=1, max_range=3.0)

    assert scan.distances[0] == 3.0
    assert not scan.hits[0]
    assert scan.steps[0] == 3
    assert scan.normalized()[0] == 1.0


def test_walk_ray_corner_tie_steps_x_first():
    cells = [cell for cell, _ in walk_ray(10, 10, (1, 1), -45.0, 3.0)]
    assert cells == [(2, 1), (2, 2), (3, 2), (3, 3)]


@pytest.mark.parametrize("angle", [45.0, 135.0, 225.0, 315.0])
def test_walk_ray_diagonal_is_4_connected(angle: float):
    cells = [(5, 5)] + [cell for cell, _ in walk_ray(11, 11, (5, 5), angle, 4.0)]
    assert len(cells) > 4
    for (x0, y0), (x1, y1) in zip(cells, cells[1:]):
        assert abs(x0 - x1) + abs(y0 - y1) == 1


def test_ray_blocked_by_touching_corners():
    grid = load_map(
        "\n".join(
            [
                "######",
                "#.#..#",
                "##...#",
                "#....#",
                "#....#",
                "######",
            ]
        )
    )
    pose = AgentPose((1, 1), 270)
    scan = ray_cast_scan(grid, pose, n_rays=3, fov_degrees=90.0)

    assert list(scan.angles) == [225.0, 270.0, 315.0]
    assert scan.hits.all()
    assert list(scan.distances) == [1.0, 1.0, 1.0]
    assert list(scan.steps) == [1, 1, 1]

    gmap = update_geometric_map(GeometricMap.for_map(grid), pose, scan)
    assert not gmap.explored[2, 2]
    assert gmap.occupied[1, 2] and gmap.occupied[2, 1]


def test_scan_fan():
    grid = open_grid(10, 10)
    scan = ray_cast_scan(grid, AgentPose((4, 4), 90), n_rays=8, fov_degrees=90.0)

    assert len(scan) == 8
    assert scan.hits.all()
    assert np.all(scan.distances > 0)
    assert np.all(scan.distances <= scan.max_range)


def test_geometric_map_update():
    grid = data_map("corridor.map")
    pose = AgentPose((2, 1), 0)
    gmap = GeometricMap.for_map(grid)
    gmap.update(pose, ray_cast_scan(grid, pose, n_rays=1))

    explored = {(int(x), int(y)) for y, x in zip(*np.nonzero(gmap.explored))}
    occupied = {(int(x), int(y)) for y, x in zip(*np.nonzero(gmap.occupied))}
    assert explored == {(2, 1), (3, 1), (4, 1), (5, 1), (6, 1), (7, 1)}
    assert occupied == {(7, 1)}
    assert gmap.explored_count == 6


def test_geometric_map_explored_cells():
    grid = open_grid(10, 10)
    pose = AgentPose((4, 5), 0)
    scan = ray_cast_scan(grid, pose, n_rays=5)

    expected = {pose.cell}
    for angle, steps in zip(scan.angles, scan.steps):
        walk = list(walk_ray(grid.width, grid.height, pose.cell, angle, scan.max_range))
        expected.update(cell for cell, _ in walk[:steps])

    gmap = update_geometric_map(GeometricMap.for_map(grid), pose, scan)
    assert gmap.explored_count == len(expected)
    assert not gmap.occupied[5, 5]


def test_update_geometric_map_copies():
    grid = open_grid()
    pose = AgentPose((3, 3), 0)
    empty = GeometricMap.for_map(grid)
    updated = update_geometric_map(empty, pose, ray_cast_scan(grid, pose))

    assert empty.explored_count == 0
    assert updated.explored_count > 0
    assert updated != empty
    assert updated.copy() == updated


def test_geometric_map_tensor():
    grid = data_map("room.map")
    tensor = GeometricMap.for_map(grid).tensor()
    assert tensor.shape == (2, 8, 9)
    assert tensor.dtype == np.float64
