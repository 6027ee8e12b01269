from __future__ import annotations

import numpy as np

from dissect.avnav.env.grid import Action, AgentPose, Cell, GridMap, geodesic_distance

SUCCESS_REWARD = 10.0
DISTANCE_REWARD = 0.25
TIME_PENALTY = -0.01


def is_success(pose: AgentPose, action: Action, source_cell: Cell) -> bool:
    return action == Action.Stop and pose.cell == source_cell


def compute_reward(
    grid: GridMap, prev_pose: AgentPose, new_pose: AgentPose, action: Action, source_cell: Cell
) -> float:
    """Reward of one low-level step.

    Distances are measured to the source's cell at the time the action is taken, which for the dynamic
    task is its current position and for the static task its fixed position.
    """
    reward = TIME_PENALTY
    if is_success(new_pose, action, source_cell):
        reward += SUCCESS_REWARD

    before = geodesic_distance(grid, prev_pose.cell, source_cell)
    after = geodesic_distance(grid, new_pose.cell, source_cell)
    if before is not None and after is not None:
        reward += DISTANCE_REWARD * float(np.sign(before - after))

    return reward
