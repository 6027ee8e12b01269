"""SVG rendering of a logged episode: the map, the agent path, the source path and an oracle path."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Union

import matplotlib
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from dissect.avnav.env.grid import Cell
from dissect.avnav.metrics.oracle import oracle_chaser
from dissect.avnav.metrics.records import EpisodeRecord

log = logging.getLogger(__name__)

AGENT_COLOR = "tab:blue"
SOURCE_COLOR = "tab:red"
ORACLE_COLOR = "tab:green"


def _dedupe(cells: list[Cell]) -> list[Cell]:
    result = []
    for cell in cells:
        if not result or result[-1] != cell:
            result.append(cell)
    return result


def _plot_path(ax, cells: list[Cell], color: str, gid: str, label: str) -> None:
    if len(cells) < 2:
        return
    xs, ys = zip(*cells)
    (line,) = ax.plot(xs, ys, color=color, linewidth=2, alpha=0.8, label=label)
    line.set_gid(gid)


def render_episode(record: EpisodeRecord, with_oracle: bool = True) -> Figure:
    """Draw ``record`` on its map. Paths with a single cell are drawn as a marker only."""
    grid = record.grid
    height, width = grid.shape

    fig = Figure(figsize=(max(3.0, width / 2), max(3.0, height / 2)))
    FigureCanvasSVG(fig)
    ax = fig.add_subplot()
    ax.imshow(
        grid.occupancy, cmap="Greys", vmin=0, vmax=1.5, origin="upper", extent=(-0.5, width - 0.5, height - 0.5, -0.5)
    )

    agent_path = _dedupe([pose.cell for pose in record.poses])
    source_path = _dedupe(record.source_trajectory)
    _plot_path(ax, agent_path, AGENT_COLOR, "agent-path", "agent")
    _plot_path(ax, source_path, SOURCE_COLOR, "source-path", "source")

    if with_oracle:
        oracle = oracle_chaser(grid, record.start, record.source_trajectory)
        _plot_path(ax, oracle.path, ORACLE_COLOR, "oracle-path", "oracle")

    (agent,) = ax.plot(*agent_path[-1], marker="o", color=AGENT_COLOR, markersize=8, linestyle="none")
    agent.set_gid("agent-marker")
    (source,) = ax.plot(*source_path[-1], marker="*", color=SOURCE_COLOR, markersize=12, linestyle="none")
    source.set_gid("source-marker")

    ax.set_title(f"episode {record.episode_id} ({record.task}, {'success' if record.success else 'failure'})")
    ax.set_xticks([])
    ax.set_yticks([])
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="upper right", fontsize="small")
    return fig


def write_replay(record: EpisodeRecord, path: Union[str, Path], with_oracle: bool = True) -> Path:
    path = Path(path)
    fig = render_episode(record, with_oracle)
    with matplotlib.rc_context({"svg.hashsalt": f"avnav-{record.episode_id}"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    log.info("Wrote replay of episode %d to %s", record.episode_id, path)
    return path

