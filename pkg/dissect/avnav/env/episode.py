from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from dissect.avnav.env.grid import (
    HEADINGS,
    MAP_STYLES,
    REPLICA_RESOLUTION,
    AgentPose,
    Cell,
    GridMap,
    generate_map,
    geodesic_distance,
)
from dissect.avnav.exception import MapError, ScenarioError

log = logging.getLogger(__name__)

_GEN_SPEC = re.compile(r"^(?P<style>\w+):(?P<width>\d+)x(?P<height>\d+)(?::(?P<seed>\d+))?$")


@dataclass(frozen=True)
class MapSpec:
    style: str
    width: int
    height: int
    seed: Optional[int] = None

    def __str__(self) -> str:
        text = f"{self.style}:{self.width}x{self.height}"
        return text if self.seed is None else f"{text}:{self.seed}"


def parse_gen_spec(text: str) -> MapSpec:
    """Parse ``<style>:<w>x<h>[:<seed>]``."""
    match = _GEN_SPEC.match(text.strip())
    if not match:
        raise MapError(f"Invalid map generation spec: {text!r}")
    if match["style"] not in MAP_STYLES:
        raise MapError(f"Unknown map style: {match['style']}")
    seed = match["seed"]
    return MapSpec(match["style"], int(match["width"]), int(match["height"]), None if seed is None else int(seed))


def build_map_pool(
    spec: MapSpec, count: int, map_seeds: Sequence[int], resolution: float = REPLICA_RESOLUTION
) -> list[GridMap]:
    """Generate ``count`` maps of one style and size.

    With an explicit seed in ``spec`` map ``i`` uses ``seed + i``, otherwise the ``i``-th entry of
    ``map_seeds``.
    """
    if count < 1:
        raise MapError(f"Need at least one map, got {count}")

    pool = []
    for idx in range(count):
        seed = spec.seed + idx if spec.seed is not None else map_seeds[idx]
        pool.append(generate_map(seed, spec.width, spec.height, spec.style, resolution))

    shapes = {grid.shape for grid in pool}
    if len(shapes) != 1:
        raise MapError(f"Map pool mixes shapes: {sorted(shapes)}")

    log.info("Built a pool of %d %s maps", count, spec)
    return pool


@dataclass(frozen=True)
class EpisodeSpec:
    episode_id: int
    map_index: int
    grid: GridMap
    start: AgentPose
    source: Cell


def generate_episode(
    pool: Sequence[GridMap],
    rng: np.random.Generator,
    episode_id: int,
    max_source_distance: Optional[int] = None,
) -> EpisodeSpec:
    """Draw a map, a start pose and a source cell on the largest free component of that map."""
    map_index = int(rng.integers(len(pool)))
    grid = pool[map_index]

    cells = sorted(grid.largest_component, key=lambda cell: (cell[1], cell[0]))
    if len(cells) < 2:
        raise ScenarioError(f"Map {map_index} has fewer than two connected free cells")

    start = cells[int(rng.integers(len(cells)))]
    heading = HEADINGS[int(rng.integers(len(HEADINGS)))]

    candidates = [cell for cell in cells if cell != start]
    if max_source_distance is not None:
        candidates = [cell for cell in candidates if geodesic_distance(grid, start, cell) <= max_source_distance]
        if not candidates:
            raise ScenarioError(f"No source within {max_source_distance} moves of {start}")
    source = candidates[int(rng.integers(len(candidates)))]

    return EpisodeSpec(episode_id, map_index, grid, AgentPose(start, heading), source)
