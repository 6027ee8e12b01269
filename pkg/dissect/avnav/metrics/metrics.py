"""Success rate and the path and action efficiency metrics of static and dynamic episodes.

Every metric is recomputed from :class:`EpisodeRecord` alone. Time index ``t`` counts the low-level steps
taken so far, so the source cell at time ``t`` is ``record.source_trajectory[t]``.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, fields, replace
from typing import Callable, Optional, Sequence

import numpy as np

from dissect.avnav.env.grid import AgentPose, Cell, GridMap, geodesic_distance, shortest_action_count
from dissect.avnav.exception import EmptyRecordsError, UnreachableError
from dissect.avnav.metrics.records import EpisodeRecord

log = logging.getLogger(__name__)

MOVES = "moves"
ACTIONS = "actions"


def _efficiency(success: bool, shortest: Optional[int], taken: int) -> float:
    if not success or shortest is None:
        return 0.0
    if shortest == 0:
        return 1.0
    return shortest / max(taken, shortest)


def _action_count(grid: GridMap, start: AgentPose, cell: Cell) -> Optional[int]:
    try:
        return shortest_action_count(grid, start, cell)
    except UnreachableError:
        return None


def _measure(kind: str) -> Callable[[GridMap, AgentPose, Cell], Optional[int]]:
    if kind == MOVES:
        return lambda grid, start, cell: geodesic_distance(grid, start.cell, cell)
    if kind == ACTIONS:
        return _action_count
    raise ValueError(f"Unknown distance kind: {kind}")


def spl_term(record: EpisodeRecord) -> float:
    """``S * g / max(p, g)`` with ``g`` the geodesic distance from the start to the source's final cell."""
    shortest = geodesic_distance(record.grid, record.start.cell, record.final_source)
    return _efficiency(record.success, shortest, record.path_length)


def sna_term(record: EpisodeRecord) -> float:
    shortest = _action_count(record.grid, record.start, record.final_source)
    return _efficiency(record.success, shortest, record.action_count)


@dataclass(frozen=True)
class DsplTracker:
    """Online search for the earliest source position the agent could have intercepted.

    The tracker locks at the first ``t`` where the distance from the start to the source at ``t`` is at
    most ``t``. Once locked it never changes.
    """

    start: AgentPose
    kind: str = MOVES
    distance: Optional[int] = None
    cell: Optional[Cell] = None
    step: Optional[int] = None

    @property
    def locked(self) -> bool:
        return self.distance is not None


def dspl_tracker_step(tracker: DsplTracker, t: int, grid: GridMap, source: Cell) -> DsplTracker:
    if tracker.locked:
        return tracker
    distance = _measure(tracker.kind)(grid, tracker.start, source)
    if distance is not None and distance <= t:
        return replace(tracker, distance=distance, cell=source, step=t)
    return tracker


def track_episode(record: EpisodeRecord, kind: str = MOVES) -> DsplTracker:
    tracker = DsplTracker(record.start, kind)
    for t, source in enumerate(record.source_trajectory):
        tracker = dspl_tracker_step(tracker, t, record.grid, source)
        if tracker.locked:
            break
    return tracker


def _dynamic_term(record: EpisodeRecord, kind: str) -> float:
    taken = record.path_length if kind == MOVES else record.action_count
    tracker = track_episode(record, kind)
    if tracker.locked:
        return _efficiency(record.success, tracker.distance, taken)
    if not record.success:
        return 0.0
    # Never locked but still succeeded: measure against the cell the agent stopped on
    shortest = _measure(kind)(record.grid, record.start, record.poses[-1].cell)
    return _efficiency(True, shortest, taken)


def dspl_term(record: EpisodeRecord) -> float:
    return _dynamic_term(record, MOVES)


def dsna_term(record: EpisodeRecord) -> float:
    return _dynamic_term(record, ACTIONS)


def episode_score(record: EpisodeRecord) -> float:
    """DSPL for dynamic episodes, SPL for static ones."""
    return dspl_term(record) if record.dynamic else spl_term(record)


def _mean(records: Sequence[EpisodeRecord], term: Callable[[EpisodeRecord], float]) -> float:
    if not records:
        raise EmptyRecordsError("Cannot compute a metric over zero episodes")
    return float(np.mean([term(record) for record in records]))


def success_rate(records: Sequence[EpisodeRecord]) -> float:
    return _mean(records, lambda record: float(record.success))


def spl(records: Sequence[EpisodeRecord]) -> float:
    return _mean(records, spl_term)


def sna(records: Sequence[EpisodeRecord]) -> float:
    return _mean(records, sna_term)


def dspl(records: Sequence[EpisodeRecord]) -> float:
    return _mean(records, dspl_term)


def dsna(records: Sequence[EpisodeRecord]) -> float:
    return _mean(records, dsna_term)


@dataclass(frozen=True)
class MetricsReport:
    episodes: int
    success_rate: float
    spl: float
    sna: float
    dspl: float
    dsna: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        names = [f.name for f in fields(self)]
        writer.writerow(names)
        writer.writerow([self.episodes] + [f"{getattr(self, name):.6f}" for name in names[1:]])
        return buf.getvalue()

    def to_table(self) -> str:
        rows = [("episodes", str(self.episodes))]
        rows += [(f.name, f"{getattr(self, f.name):.4f}") for f in fields(self)[1:]]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value:>8}" for name, value in rows)


def evaluate(records: Sequence[EpisodeRecord]) -> MetricsReport:
    if not records:
        raise EmptyRecordsError("Cannot evaluate zero episodes")
    report = MetricsReport(
        episodes=len(records),
        success_rate=success_rate(records),
        spl=spl(records),
        sna=sna(records),
        dspl=dspl(records),
        dsna=dsna(records),
    )
    log.debug("Evaluated %d episodes: %s", len(records), report)
    return report
