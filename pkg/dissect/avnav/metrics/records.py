from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterable, Iterator, Optional, TextIO

from dissect.avnav.env.grid import MOTION_ACTIONS, Action, AgentPose, Cell, GridMap, load_map
from dissect.avnav.exception import EmptyRecordsError, LogError

log = logging.getLogger(__name__)

TASKS = ("static", "dynamic")


@lru_cache(64)
def _grid_from_text(text: str) -> GridMap:
    return load_map(text)


@dataclass(frozen=True)
class StepRecord:
    """One low-level step: the action, the agent pose after it and the source cell after it."""

    action: Action
    pose: AgentPose
    source: Cell
    reward: float
    collided: bool = False

    def to_json(self) -> dict:
        return {
            "action": int(self.action),
            "pose": list(self.pose.state),
            "source": list(self.source),
            "reward": self.reward,
            "collided": self.collided,
        }

    @classmethod
    def from_json(cls, obj: dict) -> StepRecord:
        x, y, heading = obj["pose"]
        return cls(
            action=Action(obj["action"]),
            pose=AgentPose((x, y), heading),
            source=tuple(obj["source"]),
            reward=float(obj["reward"]),
            collided=bool(obj.get("collided", False)),
        )


@dataclass
class EpisodeRecord:
    episode_id: int
    seed: int
    task: str
    map_text: str
    start: AgentPose
    source_start: Cell
    steps: list[StepRecord] = field(default_factory=list)
    success: bool = False
    scenario: dict = field(default_factory=dict)

    def __repr__(self) -> str:
        return (
            f"<EpisodeRecord id={self.episode_id} task={self.task} steps={len(self.steps)} success={self.success}>"
        )

    @cached_property
    def grid(self) -> GridMap:
        return _grid_from_text(self.map_text)

    @property
    def dynamic(self) -> bool:
        return self.task == "dynamic"

    @property
    def poses(self) -> list[AgentPose]:
        return [self.start] + [step.pose for step in self.steps]

    @property
    def source_trajectory(self) -> list[Cell]:
        """Source cell at every time index, starting with the cell at reset."""
        return [self.source_start] + [step.source for step in self.steps]

    @property
    def final_source(self) -> Cell:
        return self.source_trajectory[-1]

    @property
    def actions(self) -> list[Action]:
        return [step.action for step in self.steps]

    @property
    def path_length(self) -> int:
        return sum(1 for step in self.steps if step.action == Action.MoveForward and not step.collided)

    @property
    def action_count(self) -> int:
        return sum(1 for step in self.steps if step.action in MOTION_ACTIONS)

    @property
    def total_reward(self) -> float:
        return sum(step.reward for step in self.steps)

    def to_json(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "seed": self.seed,
            "task": self.task,
            "map": self.map_text,
            "start": list(self.start.state),
            "source": list(self.source_start),
            "success": self.success,
            "scenario": self.scenario,
            "steps": [step.to_json() for step in self.steps],
        }

    @classmethod
    def from_json(cls, obj: dict) -> EpisodeRecord:
        x, y, heading = obj["start"]
        if obj["task"] not in TASKS:
            raise ValueError(f"Unknown task: {obj['task']}")
        return cls(
            episode_id=int(obj["episode_id"]),
            seed=int(obj["seed"]),
            task=obj["task"],
            map_text=obj["map"],
            start=AgentPose((x, y), heading),
            source_start=tuple(obj["source"]),
            steps=[StepRecord.from_json(step) for step in obj["steps"]],
            success=bool(obj["success"]),
            scenario=obj.get("scenario", {}),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"), sort_keys=True)


class TrajectoryLog:
    """A JSON Lines file with one :class:`EpisodeRecord` per line.

    Lines are indexed on open and parsed on first access.
    """

    def __init__(self, fh: TextIO):
        self.fh = fh
        self.lines = [line for line in fh.read().splitlines() if line.strip()]
        self.items: list[Optional[EpisodeRecord]] = [None] * len(self.lines)

    def __repr__(self) -> str:
        return f"<TrajectoryLog episodes={len(self)}>"

    def __len__(self) -> int:
        return len(self.lines)

    def __iter__(self) -> Iterator[EpisodeRecord]:
        for idx in range(len(self)):
            yield self[idx]

    def __getitem__(self, idx: int) -> EpisodeRecord:
        if self.items[idx] is None:
            try:
                self.items[idx] = EpisodeRecord.from_json(json.loads(self.lines[idx]))
            except (KeyError, TypeError, ValueError) as e:
                raise LogError(f"Malformed trajectory log line {idx + 1}: {e}")
        return self.items[idx]

    def find(self, episode_id: int) -> EpisodeRecord:
        for record in self:
            if record.episode_id == episode_id:
                return record
        raise KeyError(f"No episode {episode_id} in log")

    @classmethod
    def open(cls, path: Path) -> TrajectoryLog:
        with Path(path).open("r", encoding="utf-8") as fh:
            return cls(fh)


def write_records(path: Path, records: Iterable[EpisodeRecord], append: bool = False) -> int:
    count = 0
    with Path(path).open("a" if append else "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.dumps())
            fh.write("\n")
            count += 1
    log.info("Wrote %d episode records to %s", count, path)
    return count


def read_records(path: Path) -> list[EpisodeRecord]:
    records = list(TrajectoryLog.open(path))
    if not records:
        raise EmptyRecordsError(f"No episode records in {path}")
    return records
