from dissect.avnav.acoustics.sound import SoundBank
from dissect.avnav.config import RunConfig
from dissect.avnav.env.environment import EnvConfig, NavEnv
from dissect.avnav.env.grid import GridMap
from dissect.avnav.metrics.metrics import MetricsReport, evaluate
from dissect.avnav.metrics.records import EpisodeRecord, TrajectoryLog

__all__ = [
    "EnvConfig",
    "EpisodeRecord",
    "GridMap",
    "MetricsReport",
    "NavEnv",
    "RunConfig",
    "SoundBank",
    "TrajectoryLog",
    "evaluate",
]
