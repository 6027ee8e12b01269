from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property, lru_cache
from typing import Optional

import networkx as nx
import numpy as np

from dissect.avnav.exception import MapError, UnreachableError

log = logging.getLogger(__name__)

Cell = tuple[int, int]
State = tuple[int, int, int]

FREE = "."
BLOCKED = "#"
RESOLUTION_HEADER = "resolution="

REPLICA_RESOLUTION = 0.5
MP3D_RESOLUTION = 1.0

HEADINGS = (0, 90, 180, 270)

# Heading angles run counter-clockwise from +x (east), rows grow southwards
HEADING_VECTORS = {
    0: (1, 0),
    90: (0, -1),
    180: (-1, 0),
    270: (0, 1),
}

# N, E, S, W
NEIGHBOR_OFFSETS = ((0, -1), (1, 0), (0, 1), (-1, 0))

MAP_STYLES = ("open", "rooms", "maze")


class Action(IntEnum):
    MoveForward = 0
    RotateLeft = 1
    RotateRight = 2
    Stop = 3
    # No-op step of the continuous action variant
    Idle = 4


MOTION_ACTIONS = (Action.MoveForward, Action.RotateLeft, Action.RotateRight)


@dataclass(frozen=True)
class AgentPose:
    cell: Cell
    heading: int = 0

    def __post_init__(self) -> None:
        if self.heading not in HEADINGS:
            raise ValueError(f"Invalid heading: {self.heading}")

    @property
    def state(self) -> State:
        return (self.cell[0], self.cell[1], self.heading)

    @property
    def forward_cell(self) -> Cell:
        dx, dy = HEADING_VECTORS[self.heading]
        return (self.cell[0] + dx, self.cell[1] + dy)

    def rotated(self, quarter_turns: int) -> AgentPose:
        return AgentPose(self.cell, (self.heading + 90 * quarter_turns) % 360)


class GridMap:
    """Occupancy grid with its 4-connected navigation graph.

    The occupancy array is indexed ``[y, x]`` and is read-only after construction, so a map can be
    shared between environments. Cells are addressed as ``(x, y)`` tuples.
    """

    def __init__(self, occupancy: np.ndarray, resolution: float = REPLICA_RESOLUTION):
        occupancy = np.array(occupancy, dtype=bool)
        if occupancy.ndim != 2 or occupancy.size == 0:
            raise MapError("Occupancy must be a non-empty 2D grid")
        if occupancy.all():
            raise MapError("Map has no free cells")
        if resolution <= 0:
            raise MapError(f"Invalid resolution: {resolution}")

        occupancy.flags.writeable = False
        self.occupancy = occupancy
        self.resolution = float(resolution)

        self._distances_from = lru_cache(1024)(self._distances_from)
        self._predecessors_from = lru_cache(1024)(self._predecessors_from)
        self._action_tree = lru_cache(4096)(self._action_tree)

    def __repr__(self) -> str:
        return f"<GridMap width={self.width} height={self.height} free={len(self.free_cells)} res={self.resolution}>"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridMap):
            return NotImplemented
        return self.resolution == other.resolution and np.array_equal(self.occupancy, other.occupancy)

    def __hash__(self) -> int:
        return hash((self.occupancy.tobytes(), self.occupancy.shape, self.resolution))

    @property
    def width(self) -> int:
        return self.occupancy.shape[1]

    @property
    def height(self) -> int:
        return self.occupancy.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.occupancy.shape

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and not self.occupancy[cell[1], cell[0]]

    @cached_property
    def free_cells(self) -> list[Cell]:
        ys, xs = np.nonzero(~self.occupancy)
        return [(int(x), int(y)) for y, x in zip(ys, xs)]

    @cached_property
    def graph(self) -> nx.DiGraph:
        # Successor lists are inserted in N, E, S, W order, which fixes every BFS tie-break
        graph = nx.DiGraph()
        graph.add_nodes_from(self.free_cells)
        for x, y in self.free_cells:
            for dx, dy in NEIGHBOR_OFFSETS:
                if self.is_free((x + dx, y + dy)):
                    graph.add_edge((x, y), (x + dx, y + dy))
        return graph

    @cached_property
    def action_graph(self) -> nx.DiGraph:
        # RotateLeft first, so equal-length plans prefer left turns
        graph = nx.DiGraph()
        for cell in self.free_cells:
            for heading in HEADINGS:
                pose = AgentPose(cell, heading)
                graph.add_edge(pose.state, pose.rotated(1).state, action=Action.RotateLeft)
                graph.add_edge(pose.state, pose.rotated(-1).state, action=Action.RotateRight)
                if self.is_free(pose.forward_cell):
                    graph.add_edge(pose.state, (*pose.forward_cell, heading), action=Action.MoveForward)
        return graph

    @cached_property
    def components(self) -> list[set[Cell]]:
        components = [set(component) for component in nx.weakly_connected_components(self.graph)]
        components.sort(key=lambda component: (-len(component), min((y, x) for x, y in component)))
        return components

    @property
    def largest_component(self) -> set[Cell]:
        return self.components[0]

    def connected(self, a: Cell, b: Cell) -> bool:
        return self.is_free(a) and self.is_free(b) and b in self._distances_from(a)

    def reachable_cells(self, cell: Cell) -> list[Cell]:
        """Return the free cells reachable from ``cell`` in row-major order."""
        self._check_free(cell)
        reachable = self._distances_from(cell)
        return [other for other in self.free_cells if other in reachable]

    def _check_free(self, cell: Cell) -> None:
        if not self.is_free(cell):
            raise MapError(f"Cell {cell} is not a free cell")

    def _distances_from(self, cell: Cell) -> dict[Cell, int]:
        return nx.single_source_shortest_path_length(self.graph, cell)

    def _predecessors_from(self, cell: Cell) -> dict[Cell, Cell]:
        return dict(nx.bfs_predecessors(self.graph, cell))

    def _action_tree(self, state: State) -> tuple[dict[State, State], dict[Cell, tuple[State, int]]]:
        predecessors = dict(nx.bfs_predecessors(self.action_graph, state))
        depths = {state: 0}
        # BFS discovery order is nondecreasing in depth, so the first state seen per cell is optimal
        first = {state[:2]: (state, 0)}
        for node, parent in predecessors.items():
            depths[node] = depths[parent] + 1
            first.setdefault(node[:2], (node, depths[node]))
        return predecessors, first

    def to_text(self) -> str:
        rows = ["".join(BLOCKED if blocked else FREE for blocked in row) for row in self.occupancy]
        return "\n".join([f"{RESOLUTION_HEADER}{self.resolution}"] + rows) + "\n"


def load_map(text: str, resolution: Optional[float] = None) -> GridMap:
    """Parse an ASCII grid of ``#`` (blocked) and ``.`` (free) characters.

    An optional first line ``resolution=<float>`` sets the resolution unless one is passed explicitly.
    """
    lines = [line.rstrip() for line in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    while lines and not lines[0]:
        lines.pop(0)

    if lines and lines[0].startswith(RESOLUTION_HEADER):
        header = lines.pop(0)
        if resolution is None:
            try:
                resolution = float(header[len(RESOLUTION_HEADER) :])
            except ValueError:
                raise MapError(f"Invalid resolution header: {header!r}")

    if not lines:
        raise MapError("Map has no rows")

    width = len(lines[0])
    if width == 0 or any(len(line) != width for line in lines):
        raise MapError("Map rows are empty or of unequal length")

    unknown = set("".join(lines)) - {FREE, BLOCKED}
    if unknown:
        raise MapError(f"Unknown map characters: {''.join(sorted(unknown))!r}")

    occupancy = np.array([[char == BLOCKED for char in line] for line in lines], dtype=bool)
    return GridMap(occupancy, REPLICA_RESOLUTION if resolution is None else resolution)


def generate_map(
    seed: int, width: int, height: int, style: str = "open", resolution: float = REPLICA_RESOLUTION
) -> GridMap:
    """Generate a bordered map of the given style, deterministic in ``(seed, width, height, style)``."""
    if width < 4 or height < 4:
        raise MapError(f"Map dimensions too small: {width}x{height}")
    if style not in MAP_STYLES:
        raise MapError(f"Unknown map style: {style}")

    rng = np.random.default_rng(seed)
    occupancy = np.ones((height, width), dtype=bool)

    if style == "maze":
        _carve_maze(occupancy, rng)
    else:
        occupancy[1:-1, 1:-1] = False
        if style == "rooms":
            _build_rooms(occupancy, rng)

    grid = GridMap(occupancy, resolution)
    if len(grid.largest_component) * 2 < len(grid.free_cells):
        raise MapError("Generated map is too fragmented")

    log.debug("Generated %s map %dx%d from seed %d", style, width, height, seed)
    return grid


def _carve_maze(occupancy: np.ndarray, rng: np.random.Generator) -> None:
    height, width = occupancy.shape
    nodes_x = range(1, width - 1, 2)
    nodes_y = range(1, height - 1, 2)

    start = (nodes_x[int(rng.integers(len(nodes_x)))], nodes_y[int(rng.integers(len(nodes_y)))])
    occupancy[start[1], start[0]] = False
    stack = [start]
    visited = {start}

    while stack:
        x, y = stack[-1]
        options = []
        for dx, dy in NEIGHBOR_OFFSETS:
            nx_, ny_ = x + 2 * dx, y + 2 * dy
            if 0 < nx_ < width - 1 and 0 < ny_ < height - 1 and (nx_, ny_) not in visited:
                options.append((nx_, ny_, dx, dy))

        if not options:
            stack.pop()
            continue

        nx_, ny_, dx, dy = options[int(rng.integers(len(options)))]
        occupancy[y + dy, x + dx] = False
        occupancy[ny_, nx_] = False
        visited.add((nx_, ny_))
        stack.append((nx_, ny_))


def _build_rooms(occupancy: np.ndarray, rng: np.random.Generator) -> None:
    height, width = occupancy.shape
    if width < 7:
        return

    # One vertical wall, one horizontal wall per side, a doorway in each
    wall_x = int(rng.integers(3, width - 3))
    occupancy[1:-1, wall_x] = True

    wall_rows = set()
    if height >= 7:
        for lo, hi in ((1, wall_x), (wall_x + 1, width - 1)):
            if hi - lo < 2:
                continue
            wall_y = int(rng.integers(3, height - 3))
            occupancy[wall_y, lo:hi] = True
            occupancy[wall_y, int(rng.integers(lo, hi))] = False
            wall_rows.add(wall_y)

    # The vertical doorway must not open onto a horizontal wall
    rows = [row for row in range(1, height - 1) if row not in wall_rows]
    occupancy[rows[int(rng.integers(len(rows)))], wall_x] = False


def geodesic_distance(grid: GridMap, a: Cell, b: Cell) -> Optional[int]:
    """Return the number of unit moves on a shortest 4-connected path, or ``None`` if unreachable."""
    grid._check_free(a)
    grid._check_free(b)
    return grid._distances_from(a).get(b)


def shortest_path(grid: GridMap, a: Cell, b: Cell) -> list[Cell]:
    grid._check_free(a)
    grid._check_free(b)

    predecessors = grid._predecessors_from(a)
    if a != b and b not in predecessors:
        raise UnreachableError(f"No path from {a} to {b}")

    path = [b]
    while path[-1] != a:
        path.append(predecessors[path[-1]])
    path.reverse()
    return path


def action_plan(grid: GridMap, pose: AgentPose, target: Cell) -> list[Action]:
    """Return a minimal sequence of low-level actions that brings ``pose`` onto ``target``."""
    grid._check_free(pose.cell)
    grid._check_free(target)

    predecessors, first = grid._action_tree(pose.state)
    if target not in first:
        raise UnreachableError(f"No path from {pose.cell} to {target}")

    state, _ = first[target]
    actions = []
    while state != pose.state:
        parent = predecessors[state]
        actions.append(grid.action_graph.edges[parent, state]["action"])
        state = parent
    actions.reverse()
    return actions


def shortest_action_count(grid: GridMap, pose: AgentPose, target: Cell) -> int:
    grid._check_free(pose.cell)
    grid._check_free(target)

    _, first = grid._action_tree(pose.state)
    if target not in first:
        raise UnreachableError(f"No path from {pose.cell} to {target}")
    return first[target][1]


def action_distances(grid: GridMap, pose: AgentPose, cutoff: Optional[int] = None) -> dict[Cell, int]:
    """Return the minimal action count to every cell reachable within ``cutoff`` actions."""
    grid._check_free(pose.cell)
    _, first = grid._action_tree(pose.state)
    return {cell: depth for cell, (_, depth) in first.items() if cutoff is None or depth <= cutoff}


def step_low_level(grid: GridMap, pose: AgentPose, action: Action) -> tuple[AgentPose, bool]:
    """Apply one low-level action. Returns the new pose and whether a forward move collided."""
    if action == Action.RotateLeft:
        return pose.rotated(1), False
    if action == Action.RotateRight:
        return pose.rotated(-1), False
    if action == Action.MoveForward:
        target = pose.forward_cell
        if grid.is_free(target):
            return AgentPose(target, pose.heading), False
        return pose, True
    return pose, False
