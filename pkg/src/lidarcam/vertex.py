"""Board-vertex detection in LiDAR frame sequences.

A spinning LiDAR samples the scene in a small number of fixed-elevation
scan lines ("rings"), so a board corner is only observed in frames where
a ring happens to graze it.  The detector filters each frame to a
user-chosen region of interest, validates the segmented object, and
accepts the frame only when the highest ring inside the region holds
exactly one point: that point is the board's top vertex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np

# Object-size validation defaults; a 0.61 m x 0.91 m board rotated 45 deg
# has a ~1.1 m bounding diagonal, 1.5 m leaves room for the holder's arm.
MIN_OBJECT_POINTS = 10
MAX_OBJECT_EXTENT_M = 1.5

# Minimum ring span (max_ring - min_ring) for a frame to be usable.
MIN_RING_SPAN = 3


@dataclass
class LidarFrame:
    """One LiDAR sweep: point positions with intensity and ring labels.

    ``ring`` may be None for sources without a ring channel; use
    :func:`derive_rings` to reconstruct it from elevation angles.
    """

    timestamp: float
    positions: np.ndarray          # (N, 3) float
    intensity: np.ndarray          # (N,) float
    ring: Optional[np.ndarray]     # (N,) int or None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        self.intensity = np.asarray(self.intensity, dtype=float).reshape(-1)
        if self.ring is not None:
            self.ring = np.asarray(self.ring, dtype=int).reshape(-1)

    def __len__(self):
        return self.positions.shape[0]

    @classmethod
    def empty(cls, timestamp: float = 0.0) -> "LidarFrame":
        return cls(timestamp, np.empty((0, 3)), np.empty(0), np.empty(0, dtype=int))


@dataclass(frozen=True)
class RoiBox:
    """Axis-aligned box in LiDAR coordinates with closed boundaries."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        for lo, hi, axis in ((self.x_min, self.x_max, "x"),
                             (self.y_min, self.y_max, "y"),
                             (self.z_min, self.z_max, "z")):
            if not (lo < hi):
                raise ValueError(f"ROI {axis}_min must be < {axis}_max")

    def contains(self, positions: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(positions)
        return ((p[:, 0] >= self.x_min) & (p[:, 0] <= self.x_max)
                & (p[:, 1] >= self.y_min) & (p[:, 1] <= self.y_max)
                & (p[:, 2] >= self.z_min) & (p[:, 2] <= self.z_max))

    @classmethod
    def from_flat(cls, values: Iterable[float]) -> "RoiBox":
        x0, x1, y0, y1, z0, z1 = (float(v) for v in values)
        return cls(x0, x1, y0, y1, z0, z1)

    def to_flat(self) -> Tuple[float, ...]:
        return (self.x_min, self.x_max, self.y_min, self.y_max,
                self.z_min, self.z_max)


@dataclass(frozen=True)
class VertexDetection:
    """A confirmed board vertex for one frame."""

    frame_timestamp: float
    vertex: Tuple[float, float, float]
    ring_span: int
    roi_point_count: int


def roi_filter(frame: LidarFrame, roi: RoiBox) -> LidarFrame:
    """Keep exactly the points inside the closed box."""
    if len(frame) == 0:
        return LidarFrame(frame.timestamp, np.empty((0, 3)), np.empty(0),
                          None if frame.ring is None else np.empty(0, dtype=int))
    mask = roi.contains(frame.positions)
    return LidarFrame(frame.timestamp, frame.positions[mask],
                      frame.intensity[mask],
                      None if frame.ring is None else frame.ring[mask])


def detect_vertex(frame: LidarFrame, roi: RoiBox,
                  min_points: int = MIN_OBJECT_POINTS,
                  max_extent: float = MAX_OBJECT_EXTENT_M) -> Optional[VertexDetection]:
    """Detect the board's top vertex in one frame, or None to drop it.

    The frame is dropped unless the ROI subset (a) has at least
    ``min_points`` points within a bounding-box diagonal of
    ``max_extent``, (b) spans at least MIN_RING_SPAN rings, and (c) has
    exactly one point on its highest ring.
    """
    sub = roi_filter(frame, roi)
    if sub.ring is None:
        raise ValueError("detect_vertex requires ring labels; run derive_rings first")
    n = len(sub)
    if n < min_points:
        return None
    extent = float(np.linalg.norm(sub.positions.max(axis=0) - sub.positions.min(axis=0)))
    if extent > max_extent:
        return None
    span = int(sub.ring.max() - sub.ring.min())
    if span < MIN_RING_SPAN:
        return None
    top = sub.positions[sub.ring == sub.ring.max()]
    if top.shape[0] != 1:
        return None
    return VertexDetection(frame_timestamp=frame.timestamp,
                           vertex=tuple(float(v) for v in top[0]),
                           ring_span=span, roi_point_count=n)


def detect_sequence(frames: Iterable[LidarFrame], roi: RoiBox,
                    min_points: int = MIN_OBJECT_POINTS,
                    max_extent: float = MAX_OBJECT_EXTENT_M) -> List[VertexDetection]:
    """Run detect_vertex over an ordered frame sequence, dropping failures."""
    out = []
    for frame in frames:
        det = detect_vertex(frame, roi, min_points=min_points, max_extent=max_extent)
        if det is not None:
            out.append(det)
    return out


def drop_reason(frame: LidarFrame, roi: RoiBox,
                min_points: int = MIN_OBJECT_POINTS,
                max_extent: float = MAX_OBJECT_EXTENT_M) -> Optional[str]:
    """Human-readable reason a frame would be dropped, or None if accepted."""
    sub = roi_filter(frame, roi)
    n = len(sub)
    if n < min_points:
        return f"only {n} points in ROI (need {min_points})"
    extent = float(np.linalg.norm(sub.positions.max(axis=0) - sub.positions.min(axis=0)))
    if extent > max_extent:
        return f"object extent {extent:.2f} m exceeds {max_extent} m"
    span = int(sub.ring.max() - sub.ring.min())
    if span < MIN_RING_SPAN:
        return f"ring span {span} < {MIN_RING_SPAN}"
    top_count = int((sub.ring == sub.ring.max()).sum())
    if top_count != 1:
        return f"{top_count} points on the top ring (need exactly 1)"
    return None


def derive_rings(frame: LidarFrame, ring_count: int,
                 elevation_range_deg: Tuple[float, float]) -> LidarFrame:
    """Assign ring indices by uniform elevation binning.

    Ring 0 is the lowest elevation; out-of-range points clamp to the
    nearest edge ring.
    """
    if ring_count < 2:
        raise ValueError("ring_count must be >= 2")
    lo, hi = (math.radians(v) for v in elevation_range_deg)
    if not lo < hi:
        raise ValueError("elevation range min must be < max")
    p = frame.positions
    if len(frame) == 0:
        return LidarFrame(frame.timestamp, p, frame.intensity,
                          np.empty(0, dtype=int))
    elevation = np.arctan2(p[:, 2], np.hypot(p[:, 0], p[:, 1]))
    ring = np.floor((elevation - lo) / (hi - lo) * ring_count).astype(int)
    ring = np.clip(ring, 0, ring_count - 1)
    return LidarFrame(frame.timestamp, p, frame.intensity, ring)
