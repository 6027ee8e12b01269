from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from dissect.avnav.env.grid import AgentPose, Cell, GridMap

DEFAULT_RAYS = 64
DEFAULT_FOV = 90.0
DEFAULT_MAX_RANGE = 10.0

_TIE_EPSILON = 1e-9


@dataclass(frozen=True)
class DepthScan:
    """A fan of ray lengths around the agent heading, in cells.

    ``steps`` is the number of cells each ray traverses after leaving the agent cell, ``hits`` marks rays
    that terminated on a blocked cell rather than at ``max_range`` or the map border.
    """

    distances: np.ndarray
    angles: np.ndarray
    hits: np.ndarray
    steps: np.ndarray
    max_range: float

    def __len__(self) -> int:
        return len(self.distances)

    def normalized(self) -> np.ndarray:
        return self.distances / self.max_range


def ray_angles(heading: float, n_rays: int, fov_degrees: float) -> np.ndarray:
    if n_rays < 1:
        raise ValueError(f"Need at least one ray, got {n_rays}")
    if n_rays == 1:
        return np.array([float(heading)])
    return heading - fov_degrees / 2 + np.arange(n_rays) * (fov_degrees / (n_rays - 1))


def walk_ray(width: int, height: int, origin: Cell, angle: float, max_range: float) -> Iterator[tuple[Cell, float]]:
    """Yield the cells a ray visits after leaving ``origin`` with their center distance to ``origin``.

    Digital differential stepping from the center of ``origin``; the walk ends at the map border or at the
    first cell whose center lies beyond ``max_range``.
    """
    radians = math.radians(angle)
    dx = math.cos(radians)
    dy = -math.sin(radians)
    if abs(dx) < 1e-12:
        dx = 0.0
    if abs(dy) < 1e-12:
        dy = 0.0

    x, y = origin
    step_x = 1 if dx > 0 else -1
    step_y = 1 if dy > 0 else -1
    delta_x = abs(1.0 / dx) if dx else math.inf
    delta_y = abs(1.0 / dy) if dy else math.inf
    next_x = 0.5 * delta_x
    next_y = 0.5 * delta_y

    while True:
        # Corner ties step along x first, so a ray never slips between two diagonally touching cells
        if next_x < next_y or abs(next_x - next_y) < _TIE_EPSILON:
            x += step_x
            next_x += delta_x
        else:
            y += step_y
            next_y += delta_y

        if not (0 <= x < width and 0 <= y < height):
            return

        distance = math.hypot(x - origin[0], y - origin[1])
        if distance > max_range:
            return
        yield (x, y), distance


def ray_cast_scan(
    grid: GridMap,
    pose: AgentPose,
    n_rays: int = DEFAULT_RAYS,
    fov_degrees: float = DEFAULT_FOV,
    max_range: float = DEFAULT_MAX_RANGE,
) -> DepthScan:
    angles = ray_angles(pose.heading, n_rays, fov_degrees)
    distances = np.full(n_rays, float(max_range))
    hits = np.zeros(n_rays, dtype=bool)
    steps = np.zeros(n_rays, dtype=np.int64)

    for idx, angle in enumerate(angles):
        for count, (cell, distance) in enumerate(walk_ray(grid.width, grid.height, pose.cell, angle, max_range), 1):
            steps[idx] = count
            if not grid.is_free(cell):
                distances[idx] = distance
                hits[idx] = True
                break

    return DepthScan(distances, angles, hits, steps, float(max_range))


class GeometricMap:
    """Allocentric two-channel map: occupied cells and explored cells."""

    def __init__(self, height: int, width: int):
        self.occupied = np.zeros((height, width), dtype=bool)
        self.explored = np.zeros((height, width), dtype=bool)

    def __repr__(self) -> str:
        return f"<GeometricMap {self.shape} explored={self.explored_count} occupied={int(self.occupied.sum())}>"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GeometricMap):
            return NotImplemented
        return np.array_equal(self.occupied, other.occupied) and np.array_equal(self.explored, other.explored)

    @classmethod
    def for_map(cls, grid: GridMap) -> GeometricMap:
        return cls(grid.height, grid.width)

    @property
    def shape(self) -> tuple[int, int]:
        return self.occupied.shape

    @property
    def explored_count(self) -> int:
        return int(self.explored.sum())

    def copy(self) -> GeometricMap:
        result = GeometricMap(*self.shape)
        result.occupied[:] = self.occupied
        result.explored[:] = self.explored
        return result

    def tensor(self) -> np.ndarray:
        return np.stack([self.occupied, self.explored]).astype(np.float64)

    def update(self, pose: AgentPose, scan: DepthScan) -> None:
        height, width = self.shape
        x, y = pose.cell
        self.explored[y, x] = True

        for angle, hit, steps in zip(scan.angles, scan.hits, scan.steps):
            walk = walk_ray(width, height, pose.cell, angle, scan.max_range)
            for count, ((cx, cy), _) in enumerate(walk, 1):
                if count > steps:
                    break
                self.explored[cy, cx] = True
                if hit and count == steps:
                    self.occupied[cy, cx] = True


@dataclass(frozen=True)
class Observation:
    """What the agent perceives after an environment step."""

    spectrogram: np.ndarray
    depth: DepthScan
    gmap: GeometricMap


def update_geometric_map(gmap: GeometricMap, pose: AgentPose, scan: DepthScan) -> GeometricMap:
    result = gmap.copy()
    result.update(pose, scan)
    return result
