from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, Optional

import numpy as np

from dissect.avnav.agent.actions import WaypointTransition, execute_to_cell
from dissect.avnav.env.grid import Action, AgentPose, Cell
from dissect.avnav.nn.layers import sigmoid

if TYPE_CHECKING:
    from dissect.avnav.env.environment import NavEnv

log = logging.getLogger(__name__)

MAX_ANGULAR = 90.0
DEFAULT_IDLE_STOP_COUNT = 3


def squash_action(sample: np.ndarray) -> tuple[float, float]:
    """Map an unbounded 2-D Gaussian sample to a velocity in [0, 1] and an angle in [-90, 90] degrees."""
    return float(sigmoid(sample[0])), float(MAX_ANGULAR * np.tanh(sample[1]))


class ContinuousDiscretizer:
    """Accumulate continuous motion commands and snap them onto the grid.

    Positions are in meters, ``x`` east and ``y`` south. The angle is relative to the agent heading,
    counter-clockwise positive. The accumulator restarts from the agent position on a new episode, or
    when the agent is not standing on the cell the previous command resolved to.
    """

    def __init__(self, resolution: float, threshold: Optional[float] = None):
        self.resolution = resolution
        self.threshold = resolution / 2 if threshold is None else threshold
        self.episode_id: Optional[int] = None
        self.intermediate: Optional[np.ndarray] = None
        self.target: Optional[Cell] = None

    def __repr__(self) -> str:
        return f"<ContinuousDiscretizer resolution={self.resolution} threshold={self.threshold}>"

    def _snap(self, intermediate: float, current: float) -> float:
        diff = intermediate - current
        steps, mod = divmod(abs(diff), self.resolution)
        offset = steps * self.resolution
        if mod > self.threshold:
            offset += self.resolution
        return current + offset if diff >= 0 else current - offset

    def step(self, v: float, omega: float, episode_id: int, pose: AgentPose) -> Optional[Cell]:
        """Return the cell to move to, or ``None`` for Idle."""
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"Velocity {v} outside [0, 1]")
        if not -MAX_ANGULAR <= omega <= MAX_ANGULAR:
            raise ValueError(f"Angular command {omega} outside [-{MAX_ANGULAR}, {MAX_ANGULAR}]")

        current = np.array(pose.cell, dtype=np.float64) * self.resolution
        if episode_id != self.episode_id or self.target != pose.cell:
            self.intermediate = current.copy()

        angle = math.radians(pose.heading + omega)
        self.intermediate += (v * math.cos(angle), -v * math.sin(angle))

        snapped = [self._snap(self.intermediate[axis], current[axis]) for axis in (0, 1)]
        self.target = tuple(int(round(value / self.resolution)) for value in snapped)
        self.episode_id = episode_id
        return None if self.target == pose.cell else self.target


class ContinuousController:
    """Turn continuous policy samples into environment steps.

    Idle advances the environment by one no-op step. After ``idle_stop_count`` consecutive Idles the
    controller issues Stop.
    """

    def __init__(self, resolution: float, idle_stop_count: int = DEFAULT_IDLE_STOP_COUNT):
        self.discretizer = ContinuousDiscretizer(resolution)
        self.idle_stop_count = idle_stop_count
        self.idle_count = 0
        self.episode_id: Optional[int] = None

    def act(self, env: NavEnv, sample: np.ndarray) -> WaypointTransition:
        if env.episode_id != self.episode_id:
            self.episode_id = env.episode_id
            self.idle_count = 0

        v, omega = squash_action(sample)
        target = self.discretizer.step(v, omega, env.episode_id, env.pose)

        if target is not None and not (env.grid.is_free(target) and env.grid.connected(env.pose.cell, target)):
            target = None

        if target is not None:
            self.idle_count = 0
            return execute_to_cell(env, target)

        self.idle_count += 1
        if self.idle_count >= self.idle_stop_count:
            self.idle_count = 0
            log.debug("Stopping after %d idle steps", self.idle_stop_count)
            return execute_to_cell(env, None)

        result = env.step(Action.Idle)
        return WaypointTransition(1, result.reward, result.done, [Action.Idle])
