"""Scripted oracle agents and brute-force metric recomputation.

The brute-force functions walk the occupancy array and the logged steps with plain breadth-first
searches, sharing no code with the graph based implementation they check.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from dissect.avnav.env.grid import Action, AgentPose, Cell, GridMap, action_plan, step_low_level
from dissect.avnav.exception import UnreachableError
from dissect.avnav.metrics.metrics import dsna_term, dspl_term, sna_term, spl_term
from dissect.avnav.metrics.records import EpisodeRecord

if TYPE_CHECKING:
    from dissect.avnav.env.environment import NavEnv

log = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 500

# Heading to (dx, dy), rows grow southwards
_OFFSETS = {0: (1, 0), 90: (0, -1), 180: (-1, 0), 270: (0, 1)}


@dataclass
class ChaseResult:
    success: bool
    poses: list[AgentPose] = field(default_factory=list)
    actions: list[Action] = field(default_factory=list)

    @property
    def path(self) -> list[Cell]:
        cells = []
        for pose in self.poses:
            if not cells or cells[-1] != pose.cell:
                cells.append(pose.cell)
        return cells


def _next_action(grid: GridMap, pose: AgentPose, source: Cell) -> Optional[Action]:
    if pose.cell == source:
        return Action.Stop
    try:
        return action_plan(grid, pose, source)[0]
    except UnreachableError:
        return None


def oracle_chaser(
    grid: GridMap, start: AgentPose, trajectory: Sequence[Cell], max_steps: int = DEFAULT_MAX_STEPS
) -> ChaseResult:
    """Chase a source along a known trajectory, re-planning to its current cell every step.

    The source is at ``trajectory[t]`` before step ``t + 1`` and stays at its last cell once the
    trajectory is exhausted.
    """
    if not trajectory:
        raise ValueError("Empty source trajectory")

    result = ChaseResult(False, [start])
    pose = start
    for t in range(max_steps):
        source = trajectory[min(t, len(trajectory) - 1)]
        action = _next_action(grid, pose, source)
        if action is None:
            log.debug("Source %s unreachable from %s", source, pose.cell)
            break
        result.actions.append(action)
        if action == Action.Stop:
            result.success = True
            break
        pose, _ = step_low_level(grid, pose, action)
        result.poses.append(pose)
    return result


def run_oracle_episode(env: NavEnv, episode_id: Optional[int] = None) -> EpisodeRecord:
    """Play one episode of ``env`` with full knowledge of the live source position."""
    env.reset(episode_id)
    while not env.done:
        action = _next_action(env.grid, env.pose, env.source_cell)
        # An unreachable source cannot happen on a connected component, stop rather than wander
        env.step(Action.Stop if action is None else action)
    return env.record


def brute_force_distance(occupancy: np.ndarray, start: Cell, goal: Cell) -> Optional[int]:
    """Breadth-first search over free cells, 4-connected."""
    height, width = occupancy.shape
    seen = {start: 0}
    queue = deque([start])
    while queue:
        x, y = queue.popleft()
        if (x, y) == goal:
            return seen[(x, y)]
        for dx, dy in _OFFSETS.values():
            nx, ny = x + dx, y + dy
            if 0 <= nx < width and 0 <= ny < height and not occupancy[ny, nx] and (nx, ny) not in seen:
                seen[(nx, ny)] = seen[(x, y)] + 1
                queue.append((nx, ny))
    return None


def brute_force_action_count(occupancy: np.ndarray, start: AgentPose, goal: Cell) -> Optional[int]:
    """Breadth-first search over (cell, heading) states with forward moves and quarter turns."""
    height, width = occupancy.shape
    origin = (start.cell[0], start.cell[1], start.heading % 360)
    seen = {origin: 0}
    queue = deque([origin])
    while queue:
        x, y, heading = queue.popleft()
        if (x, y) == goal:
            return seen[(x, y, heading)]
        dx, dy = _OFFSETS[heading]
        successors = [(x, y, (heading + 90) % 360), (x, y, (heading - 90) % 360)]
        if 0 <= x + dx < width and 0 <= y + dy < height and not occupancy[y + dy, x + dx]:
            successors.append((x + dx, y + dy, heading))
        for state in successors:
            if state not in seen:
                seen[state] = seen[(x, y, heading)] + 1
                queue.append(state)
    return None


def _brute_efficiency(success: bool, shortest: Optional[int], taken: int) -> float:
    if not success or shortest is None:
        return 0.0
    if shortest == 0:
        return 1.0
    return shortest / max(taken, shortest)


def _brute_counts(record: EpisodeRecord) -> tuple[int, int]:
    """Moves and motion actions counted from consecutive logged poses."""
    moves = actions = 0
    previous = record.start
    for step in record.steps:
        if step.pose.cell != previous.cell:
            moves += 1
        if step.action in (Action.MoveForward, Action.RotateLeft, Action.RotateRight):
            actions += 1
        previous = step.pose
    return moves, actions


def brute_force_terms(record: EpisodeRecord) -> dict[str, float]:
    """All per-episode metric terms, recomputed with exhaustive scans over the logged trajectory."""
    occupancy = record.grid.occupancy
    trajectory = [record.source_start] + [step.source for step in record.steps]
    final_pose = record.steps[-1].pose if record.steps else record.start
    moves, actions = _brute_counts(record)

    terms = {
        "spl": _brute_efficiency(
            record.success, brute_force_distance(occupancy, record.start.cell, trajectory[-1]), moves
        ),
        "sna": _brute_efficiency(
            record.success, brute_force_action_count(occupancy, record.start, trajectory[-1]), actions
        ),
    }

    for name, distance, taken in (
        ("dspl", lambda cell: brute_force_distance(occupancy, record.start.cell, cell), moves),
        ("dsna", lambda cell: brute_force_action_count(occupancy, record.start, cell), actions),
    ):
        locked = None
        for t, cell in enumerate(trajectory):
            d = distance(cell)
            if d is not None and d <= t:
                locked = d
                break
        if locked is None and record.success:
            locked = distance(final_pose.cell)
        terms[name] = _brute_efficiency(record.success, locked, taken)

    return terms


@dataclass(frozen=True)
class Mismatch:
    episode_id: int
    check: str
    expected: object
    actual: object

    def __str__(self) -> str:
        return f"episode {self.episode_id}: {self.check} expected {self.expected!r}, got {self.actual!r}"


def _replay_mismatches(record: EpisodeRecord) -> list[Mismatch]:
    mismatches = []
    pose = record.start
    for idx, step in enumerate(record.steps):
        pose, collided = step_low_level(record.grid, pose, step.action)
        if pose != step.pose or collided != step.collided:
            expected, actual = (pose, collided), (step.pose, step.collided)
            mismatches.append(Mismatch(record.episode_id, f"step {idx} pose", expected, actual))
            break
    if record.success and (not record.steps or record.steps[-1].action != Action.Stop):
        mismatches.append(Mismatch(record.episode_id, "success without Stop", False, True))
    if record.success and record.poses[-1].cell != record.final_source:
        mismatches.append(
            Mismatch(record.episode_id, "success off the source", record.final_source, record.poses[-1].cell)
        )
    return mismatches


def cross_check(records: Sequence[EpisodeRecord]) -> list[Mismatch]:
    """Compare every metric term against its brute-force recomputation and replay every trajectory."""
    fast_terms = {"spl": spl_term, "sna": sna_term, "dspl": dspl_term, "dsna": dsna_term}
    mismatches = []
    for record in records:
        mismatches.extend(_replay_mismatches(record))
        brute = brute_force_terms(record)
        for name, term in fast_terms.items():
            actual = term(record)
            if actual != brute[name]:
                mismatches.append(Mismatch(record.episode_id, name, brute[name], actual))

    for mismatch in mismatches:
        log.warning("Oracle mismatch: %s", mismatch)
    return mismatches
