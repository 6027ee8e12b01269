from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from dissect.avnav.env.grid import AgentPose, Cell, GridMap, geodesic_distance

# Bearings are always multiples of 90 degrees on the grid, keep the sines exact
_SIN = {0: 0.0, 90: 1.0, 180: 0.0, -90: -1.0}

_EDGE_ANGLES = {
    (1, 0): 0,
    (0, -1): 90,
    (-1, 0): 180,
    (0, 1): 270,
}


@dataclass(frozen=True)
class PropagationResult:
    gain_left: float
    gain_right: float
    bearing: int
    geodesic_dist: Optional[int]

    @property
    def total_gain(self) -> float:
        if self.geodesic_dist is None:
            return 0.0
        return 1.0 / (1.0 + self.geodesic_dist)

    @property
    def audible(self) -> bool:
        return self.geodesic_dist is not None


INAUDIBLE = PropagationResult(0.0, 0.0, 0, None)


def _wrap_bearing(angle: int) -> int:
    angle = angle % 360
    return angle - 360 if angle > 180 else angle


def _arrival_bearing(grid: GridMap, source: Cell, listener: AgentPose, distance: int) -> int:
    """Return the relative bearing of the first step over all shortest paths towards ``source``.

    The first step closest to straight ahead wins. Sound arriving equally over the left and the right
    neighbor is centered.
    """
    x, y = listener.cell
    bearings = set()
    for step, angle in _EDGE_ANGLES.items():
        neighbor = (x + step[0], y + step[1])
        if grid.is_free(neighbor) and geodesic_distance(grid, source, neighbor) == distance - 1:
            bearings.add(_wrap_bearing(angle - listener.heading))

    if 0 in bearings or {90, -90} <= bearings:
        return 0
    return min(bearings, key=abs)


def propagate(grid: GridMap, source: Cell, listener: AgentPose) -> PropagationResult:
    """Attenuate by geodesic distance and split the energy over both ears by the bearing of the path."""
    distance = geodesic_distance(grid, listener.cell, source)
    if distance is None:
        return INAUDIBLE

    bearing = _arrival_bearing(grid, source, listener, distance) if distance > 0 else 0

    gain = 1.0 / (1.0 + distance)
    sin = _SIN[bearing]
    return PropagationResult(
        gain_left=gain * math.sqrt((1 + sin) / 2),
        gain_right=gain * math.sqrt((1 - sin) / 2),
        bearing=bearing,
        geodesic_dist=distance,
    )


def render_binaural(mono: np.ndarray, prop: PropagationResult, itd_samples: int = 0) -> np.ndarray:
    """Scale a mono chunk into a ``(2, n)`` stereo chunk; optionally delay the far ear by an integer shift."""
    left = prop.gain_left * mono
    right = prop.gain_right * mono

    shift = int(round(itd_samples * abs(_SIN[prop.bearing])))
    if shift:
        shift = min(shift, len(mono))
        if prop.bearing > 0:
            right = np.concatenate([np.zeros(shift), right[: len(mono) - shift]])
        else:
            left = np.concatenate([np.zeros(shift), left[: len(mono) - shift]])

    return np.stack([left, right])


def mix(chunks: Sequence[np.ndarray]) -> np.ndarray:
    if not chunks:
        raise ValueError("Nothing to mix")

    shape = chunks[0].shape
    if any(chunk.shape != shape for chunk in chunks):
        raise ValueError("Stereo chunks differ in shape")
    # Sorting per sample makes the float sum independent of the input order
    return np.sort(np.stack(chunks), axis=0).sum(axis=0)
