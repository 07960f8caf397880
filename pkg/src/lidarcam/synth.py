"""Synthetic LiDAR/camera recordings with exact ground truth.

The generator simulates a diamond-oriented planar board carried through
the field of view of a 16-ring LiDAR: rays on the device's fixed
elevation/azimuth grid are intersected with the board plane, so frames
where the board's top corner sits exactly on a grid ray yield a single
top-ring point at the exact corner.  A per-frame ledger records the true
vertex and its true pixel projection, which makes the recording a
desk-scale oracle for the whole pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .correspond import (CameraFrameRef, Correspondence, CorrespondenceSet,
                         DEFAULT_MAX_SKEW_S, match_camera_frame)
from .errors import EmptyLedger
from .geometry import (Calibration, ExtrinsicParams, FisheyeIntrinsics,
                       PinholeIntrinsics, project)
from .vertex import (LidarFrame, MAX_OBJECT_EXTENT_M, MIN_OBJECT_POINTS,
                     MIN_RING_SPAN, RoiBox)


@dataclass(frozen=True)
class DeviceSpec:
    """Sampling geometry and rates of the simulated sensor pair."""

    ring_count: int = 16
    elevation_min_deg: float = -15.0
    elevation_max_deg: float = 15.0
    horizontal_resolution_deg: float = 0.2
    lidar_rate_hz: float = 10.0
    camera_rate_hz: float = 30.0

    def ring_elevations_deg(self) -> np.ndarray:
        # Physical channels sit on a uniform grid across the field of view.
        return np.linspace(self.elevation_min_deg, self.elevation_max_deg,
                           self.ring_count)


@dataclass(frozen=True)
class NoiseSpec:
    pixel_sigma: float = 0.0
    point_sigma: float = 0.0

    def __post_init__(self):
        if self.pixel_sigma < 0 or self.point_sigma < 0:
            raise ValueError("noise sigmas must be >= 0")


@dataclass(frozen=True)
class BoardPose:
    """Board placement: top-vertex position and horizontal facing azimuth."""

    vertex: Tuple[float, float, float]
    facing_azimuth: float  # radians; board normal = -(cos, sin, 0)


@dataclass
class SyntheticScene:
    """Everything needed to render a recording with known ground truth."""

    ground_truth: Calibration
    trajectory: List[Tuple[float, BoardPose]]
    device: DeviceSpec = field(default_factory=DeviceSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    board_width: float = 0.61
    board_height: float = 0.91
    roi: RoiBox = field(default_factory=lambda: RoiBox(-8.0, 8.0, 2.0, 17.0,
                                                       -1.4, 1.6))
    clutter: bool = False
    image_size: Tuple[int, int] = (1280, 960)


@dataclass(frozen=True)
class LedgerEntry:
    """Per-frame truth: the unique top-ring point and its exact pixel."""

    timestamp: float
    vertex: Tuple[float, float, float]
    pixel: Tuple[float, float]


@dataclass
class SyntheticRecording:
    frames: List[LidarFrame]
    camera_frames: List[CameraFrameRef]
    ledger: List[LedgerEntry]


def default_ground_truth(model: str = "pinhole") -> Calibration:
    """A camera looking out along the LiDAR's +y axis, inside all bounds."""
    ext = ExtrinsicParams(alpha=0.5 * math.pi + 0.02, beta=-0.5 * math.pi + 0.03,
                          gamma=0.04, u0=0.12, v0=-0.06, w0=0.25)
    if model == "pinhole":
        cam = PinholeIntrinsics(fx=640.0, fy=620.0, i0=615.0, j0=590.0)
    elif model == "fisheye":
        cam = FisheyeIntrinsics(fx=640.0, fy=620.0, i0=615.0, j0=590.0,
                                alpha_c=0.01, k1=-0.28, k2=0.06, k3=0.012,
                                k4=-0.008, k5=0.02)
    else:
        raise ValueError(f"unknown camera model {model!r}")
    return Calibration(extrinsic=ext, camera=cam)


def _ray(elevation_rad: float, azimuth_rad: float) -> np.ndarray:
    ce = math.cos(elevation_rad)
    return np.array([ce * math.cos(azimuth_rad), ce * math.sin(azimuth_rad),
                     math.sin(elevation_rad)])


def make_scene(model: str = "pinhole", n_frames: int = 200, seed: int = 0,
               pixel_sigma: float = 0.0, point_sigma: float = 0.0,
               clutter: bool = False, far_fraction: float = 0.15,
               offgrid_fraction: float = 0.15,
               device: Optional[DeviceSpec] = None) -> SyntheticScene:
    """Random board trajectory through the field in front of the sensor.

    Most frames snap the board's top vertex onto a LiDAR grid ray; a
    fraction are placed too far (ring span collapses) or off-grid (the
    top ring cuts a multi-point chord), exercising the drop rules.
    """
    device = device or DeviceSpec()
    rng = np.random.default_rng(seed)
    step = math.radians(device.horizontal_resolution_deg)
    elevations = np.radians(device.ring_elevations_deg())
    trajectory = []
    for i in range(n_frames):
        t = 0.05 + i / device.lidar_rate_hz
        kind = rng.random()
        az_grid = rng.integers(int(math.radians(65.0) / step),
                               int(math.radians(115.0) / step))
        if kind < far_fraction:
            # Too far: the board subtends fewer than MIN_RING_SPAN rings.
            rho = rng.uniform(14.0, 16.0)
            ring = int(rng.integers(8, 10))
            azimuth = az_grid * step
        elif kind < far_fraction + offgrid_fraction:
            # Vertex between grid rays: the top ring samples a chord.
            rho = rng.uniform(3.5, 8.0)
            ring = int(rng.integers(8, 12))
            azimuth = (az_grid + rng.uniform(0.3, 0.7)) * step
            vertex = rho * _ray(elevations[ring] + math.radians(rng.uniform(0.6, 1.4)),
                                azimuth)
            trajectory.append((t, BoardPose(tuple(vertex), azimuth)))
            continue
        else:
            rho = rng.uniform(3.5, 8.0)
            ring = int(rng.integers(8, 12))
            azimuth = az_grid * step
        vertex = rho * _ray(elevations[ring], azimuth)
        trajectory.append((t, BoardPose(tuple(vertex), azimuth)))
    return SyntheticScene(ground_truth=default_ground_truth(model),
                          trajectory=trajectory, device=device,
                          noise=NoiseSpec(pixel_sigma=pixel_sigma,
                                          point_sigma=point_sigma),
                          clutter=clutter)


def _board_frame_axes(pose: BoardPose):
    normal = np.array([-math.cos(pose.facing_azimuth),
                       -math.sin(pose.facing_azimuth), 0.0])
    e2 = np.array([0.0, 0.0, 1.0])
    e1 = np.cross(e2, normal)
    return normal, e1, e2


def _sample_board(scene: SyntheticScene, pose: BoardPose):
    """Intersect LiDAR grid rays with the diamond board plane.

    Returns (positions, rings) of the points landing on the board.
    """
    w, h = scene.board_width, scene.board_height
    normal, e1, e2 = _board_frame_axes(pose)
    apex = np.array(pose.vertex)
    s2 = math.sqrt(2.0)
    # In-plane center of the rectangle whose 45-degree-rotated top corner
    # is the apex.
    corner_local = np.array([(w - h) / (2.0 * s2), (w + h) / (2.0 * s2)])
    center = apex - corner_local[0] * e1 - corner_local[1] * e2
    rho_xy = math.hypot(apex[0], apex[1])
    half_sector = math.asin(min(0.9, 0.8 / max(rho_xy, 1.0)))
    step = math.radians(scene.device.horizontal_resolution_deg)
    m_lo = math.ceil((pose.facing_azimuth - half_sector) / step)
    m_hi = math.floor((pose.facing_azimuth + half_sector) / step)
    azimuths = np.arange(m_lo, m_hi + 1) * step
    elevations = np.radians(scene.device.ring_elevations_deg())
    cos45, sin45 = math.cos(math.pi / 4), math.sin(math.pi / 4)
    tol = 1e-9
    positions, rings = [], []
    plane_d = float(normal @ apex)
    for k, el in enumerate(elevations):
        ce, se = math.cos(el), math.sin(el)
        dirs = np.stack([ce * np.cos(azimuths), ce * np.sin(azimuths),
                         np.full_like(azimuths, se)], axis=1)
        denom = dirs @ normal
        ok = np.abs(denom) > 1e-9
        t = np.full(len(azimuths), np.inf)
        t[ok] = plane_d / denom[ok]
        ok &= t > 0.1
        pts = dirs * t[:, None]
        rel = pts - center
        a = rel @ e1
        b = rel @ e2
        # Undo the 45-degree in-plane rotation to test rectangle membership.
        rx = cos45 * a + sin45 * b
        ry = -sin45 * a + cos45 * b
        ok &= (np.abs(rx) <= w / 2 + tol) & (np.abs(ry) <= h / 2 + tol)
        positions.append(pts[ok])
        rings.extend([k] * int(ok.sum()))
    return np.concatenate(positions, axis=0), np.array(rings, dtype=int)


def _sample_ground(scene: SyntheticScene) -> Tuple[np.ndarray, np.ndarray]:
    """Ground-plane clutter below the ROI, off to the side of the board."""
    z_ground = -1.8
    step = math.radians(scene.device.horizontal_resolution_deg)
    azimuths = np.arange(math.radians(10.0), math.radians(50.0), 4 * step)
    elevations = np.radians(scene.device.ring_elevations_deg())
    positions, rings = [], []
    for k, el in enumerate(elevations):
        if el >= -1e-9:
            continue
        t = z_ground / math.sin(el)
        if t > 40.0:
            continue
        ce = math.cos(el)
        pts = np.stack([t * ce * np.cos(azimuths), t * ce * np.sin(azimuths),
                        np.full_like(azimuths, z_ground)], axis=1)
        positions.append(pts)
        rings.extend([k] * len(azimuths))
    if not positions:
        return np.empty((0, 3)), np.empty(0, dtype=int)
    return np.concatenate(positions, axis=0), np.array(rings, dtype=int)


def _ledger_entry(scene: SyntheticScene, timestamp: float,
                  board_pts: np.ndarray, board_rings: np.ndarray
                  ) -> Optional[LedgerEntry]:
    """Ground-truth acceptance of a frame, from the raw board samples."""
    mask = scene.roi.contains(board_pts)
    pts, rings = board_pts[mask], board_rings[mask]
    if pts.shape[0] < MIN_OBJECT_POINTS:
        return None
    extent = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    if extent > MAX_OBJECT_EXTENT_M:
        return None
    if int(rings.max() - rings.min()) < MIN_RING_SPAN:
        return None
    top = pts[rings == rings.max()]
    if top.shape[0] != 1:
        return None
    vertex = top[0]
    pixel = project(vertex, scene.ground_truth)
    return LedgerEntry(timestamp=timestamp,
                       vertex=tuple(float(v) for v in vertex),
                       pixel=(float(pixel[0]), float(pixel[1])))


def generate(scene: SyntheticScene, seed: int = 0) -> SyntheticRecording:
    """Render the scene into LiDAR frames, camera frame refs and a ledger."""
    rng = np.random.default_rng(seed)
    frames: List[LidarFrame] = []
    ledger: List[LedgerEntry] = []
    clutter_pts, clutter_rings = (_sample_ground(scene) if scene.clutter
                                  else (np.empty((0, 3)), np.empty(0, dtype=int)))
    for timestamp, pose in scene.trajectory:
        board_pts, board_rings = _sample_board(scene, pose)
        entry = _ledger_entry(scene, timestamp, board_pts, board_rings)
        if entry is not None:
            ledger.append(entry)
        pts = np.concatenate([board_pts, clutter_pts], axis=0)
        rings = np.concatenate([board_rings, clutter_rings])
        intensity = np.concatenate([np.full(len(board_pts), 100.0),
                                    np.full(len(clutter_pts), 20.0)])
        if scene.noise.point_sigma > 0:
            pts = pts + rng.normal(0.0, scene.noise.point_sigma, pts.shape)
        order = rng.permutation(len(pts))
        frames.append(LidarFrame(timestamp, pts[order], intensity[order],
                                 rings[order]))
    duration = (scene.trajectory[-1][0] if scene.trajectory else 0.0) + 0.1
    n_cam = int(math.ceil(duration * scene.device.camera_rate_hz)) + 1
    camera_frames = [CameraFrameRef(id=f"cam{n:06d}",
                                    timestamp=n / scene.device.camera_rate_hz,
                                    image_path=f"images/cam{n:06d}.png")
                     for n in range(n_cam)]
    return SyntheticRecording(frames=frames, camera_frames=camera_frames,
                              ledger=ledger)


def make_correspondences(rec: SyntheticRecording, sigma: float = 0.0,
                         seed: int = 0,
                         max_skew: float = DEFAULT_MAX_SKEW_S,
                         recording_name: str = "synthetic"
                         ) -> CorrespondenceSet:
    """One noisy annotation per ledger entry, synced to the nearest frame."""
    if not rec.ledger:
        raise EmptyLedger("recording has no ledger entries")
    rng = np.random.default_rng(seed)
    records = []
    for entry in rec.ledger:
        frame = match_camera_frame(entry.timestamp, rec.camera_frames, max_skew)
        if frame is None:
            continue
        noise = rng.normal(0.0, sigma, 2) if sigma > 0 else np.zeros(2)
        records.append(Correspondence(
            lidar=entry.vertex,
            pixel=(entry.pixel[0] + float(noise[0]),
                   entry.pixel[1] + float(noise[1])),
            lidar_timestamp=entry.timestamp,
            camera_timestamp=frame.timestamp,
            camera_frame_id=frame.id))
    return CorrespondenceSet(records=tuple(records), recording=recording_name,
                             devices="sim-lidar16,sim-cam")


def sample_field_points(scene: SyntheticScene, n: int, seed: int = 0) -> np.ndarray:
    """Held-out 3D points drawn from the trajectory's bounding region."""
    vertices = np.array([p.vertex for _, p in scene.trajectory])
    lo = vertices.min(axis=0) - np.array([0.3, 0.3, 0.8])
    hi = vertices.max(axis=0) + np.array([0.3, 0.3, 0.2])
    return np.random.default_rng(seed).uniform(lo, hi, size=(n, 3))
