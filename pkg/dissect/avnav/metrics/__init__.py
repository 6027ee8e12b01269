from dissect.avnav.metrics.metrics import (
    DsplTracker,
    MetricsReport,
    dsna,
    dsna_term,
    dspl,
    dspl_term,
    dspl_tracker_step,
    episode_score,
    evaluate,
    sna,
    sna_term,
    spl,
    spl_term,
    success_rate,
    track_episode,
)
from dissect.avnav.metrics.oracle import (
    ChaseResult,
    Mismatch,
    brute_force_terms,
    cross_check,
    oracle_chaser,
    run_oracle_episode,
)
from dissect.avnav.metrics.records import (
    EpisodeRecord,
    StepRecord,
    TrajectoryLog,
    read_records,
    write_records,
)

__all__ = [
    "ChaseResult",
    "DsplTracker",
    "EpisodeRecord",
    "MetricsReport",
    "Mismatch",
    "StepRecord",
    "TrajectoryLog",
    "brute_force_terms",
    "cross_check",
    "dsna",
    "dsna_term",
    "dspl",
    "dspl_term",
    "dspl_tracker_step",
    "episode_score",
    "evaluate",
    "oracle_chaser",
    "read_records",
    "run_oracle_episode",
    "sna",
    "sna_term",
    "spl",
    "spl_term",
    "success_rate",
    "track_episode",
    "write_records",
]
