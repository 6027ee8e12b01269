from __future__ import annotations

import csv
import logging
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from dissect.avnav.agent.policy import PolicyParameters, init_policy
from dissect.avnav.config import RunConfig
from dissect.avnav.env.environment import NavEnv
from dissect.avnav.metrics.metrics import episode_score
from dissect.avnav.metrics.records import EpisodeRecord
from dissect.avnav.nn.checkpoint import write_checkpoint
from dissect.avnav.nn.optim import AdamState
from dissect.avnav.ppo.rollout import RolloutWorker, collect_rollouts
from dissect.avnav.ppo.update import UpdateStats, estimate_advantages, update

log = logging.getLogger(__name__)

STATS_COLUMNS = (
    "update",
    "mean_return",
    "success_rate",
    "spl_or_dspl",
    "loss_clip",
    "loss_value",
    "entropy",
    "lr",
)

FINAL_CHECKPOINT = "checkpoint-final.davn"


@dataclass
class UpdateSummary:
    update: int
    mean_return: float
    success_rate: float
    spl_or_dspl: float
    stats: UpdateStats

    def row(self) -> list[str]:
        return [
            str(self.update),
            f"{self.mean_return:.6f}",
            f"{self.success_rate:.6f}",
            f"{self.spl_or_dspl:.6f}",
            f"{self.stats.loss_clip:.6f}",
            f"{self.stats.loss_value:.6f}",
            f"{self.stats.entropy:.6f}",
            f"{self.stats.lr:.8g}",
        ]


class EpisodeWindow:
    """Returns, successes and efficiency scores of the most recent finished episodes."""

    def __init__(self, size: int):
        self.returns: deque[float] = deque(maxlen=size)
        self.successes: deque[float] = deque(maxlen=size)
        self.scores: deque[float] = deque(maxlen=size)

    def __len__(self) -> int:
        return len(self.returns)

    def add(self, record: EpisodeRecord) -> None:
        self.returns.append(record.total_reward)
        self.successes.append(float(record.success))
        self.scores.append(episode_score(record))

    def mean(self, values: deque[float]) -> float:
        return float(np.mean(values)) if values else 0.0


def checkpoint_name(update_index: int) -> str:
    return f"checkpoint-{update_index:06d}.davn"


class Trainer:
    """Collect, estimate and update for ``config.num_updates`` rounds.

    The output directory receives the resolved ``config.json``, ``stats.csv`` with one row per update
    and periodic checkpoints.
    """

    def __init__(self, config: RunConfig, out_dir: Optional[Path] = None):
        self.config = config
        self.out_dir = Path(out_dir or config.out_dir)

        self.streams = config.streams()
        self.bank = config.sound_bank()
        self.maps = config.map_pool(self.streams)
        env_config = config.env_config(self.bank)

        self.envs = [
            NavEnv(self.maps, self.bank, self.streams, env_config, idx, config.num_envs)
            for idx in range(config.num_envs)
        ]
        self.arch = config.policy_arch(self.maps[0].shape)
        self.params = init_policy(self.arch, self.streams.init())
        self.optimizer = AdamState.for_params(self.params.tensors)
        self.workers = [
            RolloutWorker(
                env,
                self.streams.policy(idx),
                self.arch.hidden_size,
                config.action_map_size,
                config.continuous_actions,
                idle_stop_count=config.idle_stop_count,
            )
            for idx, env in enumerate(self.envs)
        ]
        self.window = EpisodeWindow(config.stats_window)
        self.ppo = config.ppo_config()
        self.low_level_steps = 0

    def __repr__(self) -> str:
        return f"<Trainer envs={len(self.envs)} updates={self.config.num_updates} out={self.out_dir}>"

    def train_update(self, update_index: int) -> UpdateSummary:
        batch = collect_rollouts(self.workers, self.params, self.config.num_steps)
        self.low_level_steps += batch.sub_steps
        for record in batch.finished:
            self.window.add(record)

        estimate = estimate_advantages(batch, self.ppo.gamma, self.ppo.tau)
        self.params, self.optimizer, stats = update(
            self.params, batch, estimate, self.optimizer, self.ppo, update_index, self.config.num_updates
        )
        return UpdateSummary(
            update=update_index,
            mean_return=self.window.mean(self.window.returns),
            success_rate=self.window.mean(self.window.successes),
            spl_or_dspl=self.window.mean(self.window.scores),
            stats=stats,
        )

    def save(self, name: str) -> Path:
        path = self.out_dir / name
        write_checkpoint(self.params.tensors, path)
        return path

    def train(self) -> PolicyParameters:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.config.write(self.out_dir / "config.json")
        log.info("Training %r with %d parameters", self, self.params.size)

        with (self.out_dir / "stats.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(STATS_COLUMNS)
            for update_index in range(self.config.num_updates):
                summary = self.train_update(update_index)
                writer.writerow(summary.row())
                fh.flush()

                log.info(
                    "Update %d: return %.3f success %.3f score %.3f loss %.5f lr %.3g (%d steps, %d episodes)",
                    update_index,
                    summary.mean_return,
                    summary.success_rate,
                    summary.spl_or_dspl,
                    summary.stats.total,
                    summary.stats.lr,
                    self.low_level_steps,
                    len(self.window),
                )

                interval = self.config.checkpoint_interval
                if interval and (update_index + 1) % interval == 0 and update_index + 1 < self.config.num_updates:
                    self.save(checkpoint_name(update_index + 1))

        self.save(FINAL_CHECKPOINT)
        return self.params
