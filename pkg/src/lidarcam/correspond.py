"""Correspondence collection: time sync, annotation bookkeeping, splits.

A correspondence pairs one detected LiDAR vertex with one human-annotated
pixel on the camera frame captured closest in time.  Sets are immutable;
mutation returns a new set so readers always see a consistent snapshot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (DuplicateAnnotation, EmptyInput, SkewExceeded,
                     TooFewCorrespondences)
from .vertex import VertexDetection

# The sensors in the reference setup run at ~35 and ~53 fps; half the
# slower period is ~14 ms, so 50 ms accepts any sane match while still
# rejecting gross gaps.
DEFAULT_MAX_SKEW_S = 0.05


@dataclass(frozen=True)
class CameraFrameRef:
    """One camera frame on disk, identified by an opaque id."""

    id: str
    timestamp: float
    image_path: str


@dataclass(frozen=True)
class Correspondence:
    """One (LiDAR vertex, annotated pixel) pair tied by timestamps."""

    lidar: Tuple[float, float, float]
    pixel: Tuple[float, float]
    lidar_timestamp: float
    camera_timestamp: float
    camera_frame_id: str

    @property
    def key(self) -> Tuple[float, str]:
        return (self.lidar_timestamp, self.camera_frame_id)


@dataclass(frozen=True)
class CorrespondenceSet:
    """Ordered, duplicate-free collection of correspondences."""

    records: Tuple[Correspondence, ...] = ()
    recording: str = ""
    devices: str = ""

    def __post_init__(self):
        keys = [r.key for r in self.records]
        if len(set(keys)) != len(keys):
            raise DuplicateAnnotation("duplicate (lidar_timestamp, frame_id) pair")

    def __len__(self):
        return len(self.records)

    def points(self) -> np.ndarray:
        return np.array([r.lidar for r in self.records], dtype=float).reshape(-1, 3)

    def pixels(self) -> np.ndarray:
        return np.array([r.pixel for r in self.records], dtype=float).reshape(-1, 2)

    def with_record(self, record: Correspondence) -> "CorrespondenceSet":
        if any(r.key == record.key for r in self.records):
            raise DuplicateAnnotation(f"annotation for {record.key} already exists")
        return replace(self, records=self.records + (record,))

    def without_key(self, key: Tuple[float, str]) -> "CorrespondenceSet":
        kept = tuple(r for r in self.records if r.key != key)
        if len(kept) == len(self.records):
            raise KeyError(f"no correspondence with key {key}")
        return replace(self, records=kept)


def match_camera_frame(t_lidar: float, frames: Sequence[CameraFrameRef],
                       max_skew: float = DEFAULT_MAX_SKEW_S) -> Optional[CameraFrameRef]:
    """Nearest camera frame in time, or None beyond max_skew.

    Ties break toward the earlier frame.
    """
    best = None
    best_dt = math.inf
    for f in frames:
        dt = abs(f.timestamp - t_lidar)
        if dt < best_dt:
            best, best_dt = f, dt
    if best is None or best_dt > max_skew:
        return None
    return best


def add_annotation(cset: CorrespondenceSet, detection: VertexDetection,
                   frame: CameraFrameRef, pixel: Tuple[float, float],
                   max_skew: float = DEFAULT_MAX_SKEW_S) -> CorrespondenceSet:
    """Extend the set by one annotated pair; duplicates are rejected."""
    i, j = float(pixel[0]), float(pixel[1])
    if not (math.isfinite(i) and math.isfinite(j)):
        raise ValueError("pixel coordinates must be finite")
    if abs(detection.frame_timestamp - frame.timestamp) > max_skew:
        raise SkewExceeded(
            f"|{detection.frame_timestamp} - {frame.timestamp}| > {max_skew}")
    return cset.with_record(Correspondence(
        lidar=detection.vertex, pixel=(i, j),
        lidar_timestamp=detection.frame_timestamp,
        camera_timestamp=frame.timestamp,
        camera_frame_id=frame.id))


def split(cset: CorrespondenceSet, fraction: float, seed: int
          ) -> Tuple[CorrespondenceSet, CorrespondenceSet]:
    """Deterministic seeded partition into (train, test).

    Train receives ceil(n * fraction) records; the disjoint union of the
    two halves equals the input.
    """
    n = len(cset)
    if n < 2:
        raise TooFewCorrespondences("need at least 2 records to split")
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    n_train = math.ceil(n * fraction)
    order = np.random.default_rng(seed).permutation(n)
    train_idx = set(order[:n_train].tolist())
    train = tuple(r for i, r in enumerate(cset.records) if i in train_idx)
    test = tuple(r for i, r in enumerate(cset.records) if i not in train_idx)
    return (replace(cset, records=train), replace(cset, records=test))
