"""Command line entry point: train, eval, replay, oracle, dump-spectrogram and bench."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from dissect.avnav.acoustics.spectrogram import dump_spectrogram, write_pgm
from dissect.avnav.agent.actions import ARGMAX, SAMPLE
from dissect.avnav.agent.policy import PolicyParameters
from dissect.avnav.config import SCENARIOS, SOUNDS, RunConfig
from dissect.avnav.env.environment import NavEnv
from dissect.avnav.exception import (
    CheckpointError,
    ConfigError,
    EmptyRecordsError,
    Error,
    InvalidSignatureError,
    LogError,
    MapError,
)
from dissect.avnav.metrics.metrics import evaluate
from dissect.avnav.metrics.oracle import cross_check, run_oracle_episode
from dissect.avnav.metrics.records import TASKS, EpisodeRecord, TrajectoryLog, read_records, write_records
from dissect.avnav.nn.checkpoint import read_checkpoint
from dissect.avnav.ppo.rollout import run_episodes
from dissect.avnav.ppo.trainer import Trainer
from dissect.avnav.tools.bench import bench_csv, throughput_bench
from dissect.avnav.tools.replay import write_replay

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_CHECKPOINT = 4
EXIT_LOG = 5
EXIT_MISMATCH = 6

TRAJECTORIES = "trajectories.jsonl"
METRICS = "metrics.csv"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"


def load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    config = config.with_overrides(
        seed=args.seed,
        out_dir=args.out,
        num_envs=args.num_envs,
        task=args.task,
        scenario=args.scenario,
        sounds=args.sounds,
        map_path=args.map,
        gen=args.gen,
    )
    log.debug("Resolved config: %s", config.to_json())
    return config


def _load_log(path: Path) -> list[EpisodeRecord]:
    try:
        return read_records(path)
    except OSError as e:
        raise LogError(f"Cannot read trajectory log {path}: {e}")


def _eval_env(config: RunConfig) -> NavEnv:
    streams = config.streams()
    bank = config.sound_bank()
    maps = config.map_pool(streams)
    return NavEnv(maps, bank, streams, config.env_config(bank, evaluation=True))


def _write_report(records: list[EpisodeRecord], out_dir: Path) -> None:
    report = evaluate(records)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / METRICS).write_text(report.to_csv(), encoding="utf-8")
    print(report.to_table())


def cmd_train(args: argparse.Namespace) -> int:
    config = load_config(args)
    Trainer(config).train()
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    config = load_config(args)
    if args.episodes is not None:
        config = config.with_overrides(eval_episodes=args.episodes)
    out_dir = Path(config.out_dir)

    if args.log:
        records = _load_log(args.log)
    else:
        if not args.checkpoint:
            raise CheckpointError("eval needs --checkpoint or --log")
        env = _eval_env(config)
        arch = config.policy_arch(env.maps[0].shape)
        params = PolicyParameters(arch, read_checkpoint(args.checkpoint))
        records = run_episodes(
            env,
            params,
            range(config.eval_episodes),
            config.streams().policy(0),
            args.mode,
            config.action_map_size,
            config.continuous_actions,
        )
        out_dir.mkdir(parents=True, exist_ok=True)
        config.write(out_dir / "config.json")
        write_records(out_dir / TRAJECTORIES, records)

    _write_report(records, out_dir)
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    records = _load_log(args.log)
    if args.episode is None:
        record = records[0]
    else:
        try:
            record = TrajectoryLog.open(args.log).find(args.episode)
        except KeyError as e:
            raise LogError(str(e))

    out = Path(args.out) if args.out else Path(f"episode-{record.episode_id}.svg")
    write_replay(record, out, with_oracle=not args.no_oracle)
    print(evaluate(records).to_csv(), end="")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    if args.log:
        records = _load_log(args.log)
        mismatches = cross_check(records)
        for mismatch in mismatches:
            print(mismatch)
        print(f"{len(records)} episodes checked, {len(mismatches)} mismatches")
        return EXIT_MISMATCH if mismatches else EXIT_OK

    config = load_config(args)
    if args.episodes is not None:
        config = config.with_overrides(eval_episodes=args.episodes)
    env = _eval_env(config)
    records = [run_oracle_episode(env, episode_id) for episode_id in range(config.eval_episodes)]

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_records(out_dir / "oracle.jsonl", records)
    _write_report(records, out_dir)
    return EXIT_OK


def cmd_dump_spectrogram(args: argparse.Namespace) -> int:
    config = load_config(args)
    env = _eval_env(config)
    obs = env.reset(args.episode)
    spec = obs.spectrogram

    with Path(args.output).open("wb") as fh:
        dump_spectrogram(spec, fh)
    if args.pgm:
        write_pgm(spec, Path(args.pgm))
    print(f"episode {args.episode}: spectrogram {spec.shape} written to {args.output}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    config = load_config(args)
    results = throughput_bench(config, args.duration, args.warmup)
    text = bench_csv(results)
    if args.csv:
        Path(args.csv).write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="avnav", description="Audio-goal navigation benchmark")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="increase output verbosity")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="config file, key = value lines or JSON")
        p.add_argument("--seed", type=int, help="run seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--num-envs", type=int, help="number of environments")
        p.add_argument("--task", choices=TASKS)
        p.add_argument("--scenario", choices=SCENARIOS)
        p.add_argument("--sounds", choices=SOUNDS)
        p.add_argument("--map", help="ASCII map file, replaces generated maps")
        p.add_argument("--gen", help="map generation spec <style>:<w>x<h>[:<seed>]")

    p = sub.add_parser("train", help="train a policy with PPO")
    add_common(p)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint or recompute the metrics of a log")
    add_common(p)
    p.add_argument("--checkpoint", type=Path)
    p.add_argument("--log", type=Path, help="recompute metrics of an existing trajectory log")
    p.add_argument("--episodes", type=int)
    p.add_argument("--mode", choices=(ARGMAX, SAMPLE), default=ARGMAX)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("replay", help="render an episode of a trajectory log to SVG")
    p.add_argument("--log", type=Path, required=True)
    p.add_argument("--episode", type=int)
    p.add_argument("--out", help="SVG output path")
    p.add_argument("--no-oracle", action="store_true", help="omit the oracle path")
    p.set_defaults(handler=cmd_replay)

    p = sub.add_parser("oracle", help="cross-check a log against brute-force metrics, or run the oracle agent")
    add_common(p)
    p.add_argument("--log", type=Path)
    p.add_argument("--episodes", type=int)
    p.set_defaults(handler=cmd_oracle)

    p = sub.add_parser("dump-spectrogram", help="write the first observation spectrogram of an episode")
    add_common(p)
    p.add_argument("--episode", type=int, default=0)
    p.add_argument("--output", required=True, help="binary spectrogram dump")
    p.add_argument("--pgm", help="also write a grayscale preview")
    p.set_defaults(handler=cmd_dump_spectrogram)

    p = sub.add_parser("bench", help="measure environment throughput")
    add_common(p)
    p.add_argument("--duration", type=float, default=5.0, help="seconds per measurement")
    p.add_argument("--warmup", type=float, default=0.5)
    p.add_argument("--csv", help="also write the results to this file")
    p.set_defaults(handler=cmd_bench)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format=LOG_FORMAT)

    try:
        return args.handler(args)
    except (ConfigError, MapError) as e:
        log.error("Invalid configuration: %s", e)
        return EXIT_CONFIG
    except (CheckpointError, InvalidSignatureError) as e:
        log.error("Invalid checkpoint: %s", e)
        return EXIT_CHECKPOINT
    except (EmptyRecordsError, LogError) as e:
        log.error("Invalid trajectory log: %s", e)
        return EXIT_LOG
    except Error as e:
        log.error("%s", e)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
