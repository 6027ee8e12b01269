from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from dissect.avnav.env.grid import Action, AgentPose, Cell, GridMap, action_distances, action_plan
from dissect.avnav.exception import UnreachableError
from dissect.avnav.nn.layers import CategoricalOutput, categorical_head

if TYPE_CHECKING:
    from dissect.avnav.env.environment import NavEnv

log = logging.getLogger(__name__)

SAMPLE = "sample"
ARGMAX = "argmax"


def stop_index(size: int) -> int:
    return (size * size) // 2


def max_sub_steps(size: int) -> int:
    """Low-level action budget of one waypoint: four for a 3x3 map."""
    return 2 * (size // 2) + 2


def waypoint_cell(pose: AgentPose, index: int, size: int) -> Optional[Cell]:
    """Map a flat action map index to a world cell, or ``None`` for Stop.

    The map is centered on the agent and world aligned: row 0 is the northern row, column 0 the western one.
    """
    if not 0 <= index < size * size:
        raise ValueError(f"Waypoint index {index} outside a {size}x{size} action map")
    if index == stop_index(size):
        return None
    row, col = divmod(index, size)
    half = size // 2
    return (pose.cell[0] + col - half, pose.cell[1] + row - half)


def waypoint_mask(grid: GridMap, pose: AgentPose, size: int) -> np.ndarray:
    """Waypoints the planner can reach within the sub-step budget. Stop is always available."""
    reachable = action_distances(grid, pose, cutoff=max_sub_steps(size))
    mask = np.zeros(size * size, dtype=bool)
    for index in range(size * size):
        cell = waypoint_cell(pose, index, size)
        mask[index] = cell is None or (cell != pose.cell and cell in reachable)
    return mask


@dataclass(frozen=True)
class WaypointChoice:
    index: int
    distribution: CategoricalOutput

    @property
    def log_prob(self) -> float:
        return self.distribution.log_prob(self.index)


def select_waypoint(
    logits: np.ndarray, mask: np.ndarray, rng: Optional[np.random.Generator] = None, mode: str = SAMPLE
) -> WaypointChoice:
    distribution = categorical_head(logits, mask)
    if mode == ARGMAX:
        index = int(np.argmax(np.where(distribution.mask, distribution.probs, -1.0)))
    elif mode == SAMPLE:
        if rng is None:
            raise ValueError("Sampling a waypoint needs a random generator")
        # Masked entries have zero mass and leave flat runs in the CDF, which a right-sided search skips
        cdf = np.cumsum(distribution.probs)
        index = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    else:
        raise ValueError(f"Unknown selection mode: {mode}")
    return WaypointChoice(index, distribution)


@dataclass
class WaypointTransition:
    sub_steps: int = 0
    reward: float = 0.0
    done: bool = False
    actions: list[Action] = field(default_factory=list)


def execute_to_cell(env: NavEnv, target: Optional[Cell], budget: Optional[int] = None) -> WaypointTransition:
    """Drive the environment to ``target`` along a minimal action plan, or Stop for ``None``.

    Rewards of the sub-steps are summed into one transition; the plan stops early when the episode ends.
    """
    transition = WaypointTransition()
    if target is None:
        plan = [Action.Stop]
    else:
        plan = action_plan(env.grid, env.pose, target)
        if budget is not None and len(plan) > budget:
            raise UnreachableError(f"Waypoint {target} needs {len(plan)} actions, budget is {budget}")

    for action in plan:
        result = env.step(action)
        transition.sub_steps += 1
        transition.reward += result.reward
        transition.actions.append(action)
        if result.done:
            transition.done = True
            break

    return transition


def execute_waypoint(env: NavEnv, index: int, size: int) -> WaypointTransition:
    target = waypoint_cell(env.pose, index, size)
    transition = execute_to_cell(env, target, max_sub_steps(size))
    log.debug("Waypoint %s executed in %d sub-steps, reward %.2f", target, transition.sub_steps, transition.reward)
    return transition
