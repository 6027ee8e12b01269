from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from dissect.avnav.env.grid import Cell, GridMap, shortest_path
from dissect.avnav.exception import ScenarioError

DEFAULT_MOVE_PROBABILITY = 0.3


@dataclass(frozen=True)
class MotionModel:
    """A sound source walking shortest paths between uniformly drawn goals.

    ``pending_path`` holds the remaining cells from ``current`` (exclusive) to ``goal`` (inclusive).
    """

    current: Cell
    goal: Cell
    pending_path: deque = field(default_factory=deque)
    move_probability: float = DEFAULT_MOVE_PROBABILITY

    @classmethod
    def start(
        cls,
        grid: GridMap,
        rng: np.random.Generator,
        current: Cell,
        agent_cell: Cell,
        move_probability: float = DEFAULT_MOVE_PROBABILITY,
    ) -> MotionModel:
        goal = sample_source_goal(grid, rng, current, exclude=agent_cell)
        return cls(current, goal, deque(shortest_path(grid, current, goal)[1:]), move_probability)


def sample_source_goal(grid: GridMap, rng: np.random.Generator, source_cell: Cell, exclude: Cell) -> Cell:
    """Draw a goal uniformly from the cells reachable from ``source_cell``, never ``source_cell`` or ``exclude``."""
    candidates = [cell for cell in grid.reachable_cells(source_cell) if cell not in (source_cell, exclude)]
    if not candidates:
        raise ScenarioError(f"No goal candidate reachable from {source_cell}")
    return candidates[int(rng.integers(len(candidates)))]


def source_step(model: MotionModel, grid: GridMap, rng: np.random.Generator, agent_cell: Cell) -> MotionModel:
    """Advance the source one environment step.

    A uniform draw is consumed every step; with probability ``move_probability`` the source hops to the
    next cell of its path. Once the goal is reached a new goal is drawn away from the source and the agent.
    """
    current = model.current
    goal = model.goal
    pending = deque(model.pending_path)

    if rng.random() < model.move_probability and pending:
        current = pending.popleft()

    if not pending:
        goal = sample_source_goal(grid, rng, current, exclude=agent_cell)
        pending = deque(shortest_path(grid, current, goal)[1:])

    return replace(model, current=current, goal=goal, pending_path=pending)
