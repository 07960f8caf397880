"""Projection models from LiDAR coordinates to image pixels.

The LiDAR -> image mapping has two stages: a rigid 6-DOF extrinsic
transform into camera coordinates (u, v, w), with w the depth along the
optical axis, followed by an intrinsic projection onto the image plane.
Two intrinsic models are supported: an ideal pinhole and a distorted
model with radial/tangential terms plus skew.

All angles are radians, all lengths meters, all image coordinates pixels.
Every function here is pure and safe to call from multiple threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from .errors import BehindCamera, EmptyInput

# Points closer to the image plane than this are treated as un-imageable.
EPSILON_DEPTH = 1e-6

# Loss contribution of a pair whose point falls behind the camera. Keeps
# the objective finite while strongly penalizing such parameter sets.
BEHIND_CAMERA_PENALTY_PX = 1e4


def _require_finite(name, *values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class ExtrinsicParams:
    """Rigid transform: rotation angles about x/y/z and a translation."""

    alpha: float
    beta: float
    gamma: float
    u0: float
    v0: float
    w0: float

    def __post_init__(self):
        _require_finite("extrinsic parameter", self.alpha, self.beta, self.gamma,
                        self.u0, self.v0, self.w0)

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.u0, self.v0, self.w0])

    @classmethod
    def identity(cls) -> "ExtrinsicParams":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class PinholeIntrinsics:
    """Ideal pinhole: focal lengths and principal point, all in pixels."""

    fx: float
    fy: float
    i0: float
    j0: float

    def __post_init__(self):
        _require_finite("intrinsic parameter", self.fx, self.fy, self.i0, self.j0)
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")


@dataclass(frozen=True)
class FisheyeIntrinsics:
    """Distorted model: radial (k1, k2, k5), tangential (k3, k4) and skew."""

    fx: float
    fy: float
    i0: float
    j0: float
    alpha_c: float = 0.0
    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    k4: float = 0.0
    k5: float = 0.0

    def __post_init__(self):
        _require_finite("intrinsic parameter", self.fx, self.fy, self.i0, self.j0,
                        self.alpha_c, self.k1, self.k2, self.k3, self.k4, self.k5)
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")


CameraModel = Union[PinholeIntrinsics, FisheyeIntrinsics]


@dataclass(frozen=True)
class Calibration:
    """Full parameter bundle: extrinsic transform plus one camera model."""

    extrinsic: ExtrinsicParams
    camera: CameraModel

    @property
    def model(self) -> str:
        return "fisheye" if isinstance(self.camera, FisheyeIntrinsics) else "pinhole"


def rotation_matrix(e: ExtrinsicParams) -> np.ndarray:
    """Rotation as the product R_roll(alpha) . R_pitch(beta) . R_yaw(gamma)."""
    ca, sa = math.cos(e.alpha), math.sin(e.alpha)
    cb, sb = math.cos(e.beta), math.sin(e.beta)
    cg, sg = math.cos(e.gamma), math.sin(e.gamma)
    r_roll = np.array([[1.0, 0.0, 0.0],
                       [0.0, ca, -sa],
                       [0.0, sa, ca]])
    r_pitch = np.array([[cb, 0.0, sb],
                        [0.0, 1.0, 0.0],
                        [-sb, 0.0, cb]])
    r_yaw = np.array([[cg, -sg, 0.0],
                      [sg, cg, 0.0],
                      [0.0, 0.0, 1.0]])
    return r_roll @ r_pitch @ r_yaw


def extrinsic_transform(p: np.ndarray, e: ExtrinsicParams) -> np.ndarray:
    """Map LiDAR points (..., 3) to camera coordinates R p + t."""
    p = np.asarray(p, dtype=float)
    return p @ rotation_matrix(e).T + e.translation


def project_pinhole(c: np.ndarray, k: PinholeIntrinsics) -> np.ndarray:
    """Project camera-frame points (..., 3) through the pinhole model.

    Raises BehindCamera if any depth w <= EPSILON_DEPTH.
    """
    c = np.asarray(c, dtype=float)
    w = c[..., 2]
    if np.any(w <= EPSILON_DEPTH):
        raise BehindCamera(f"depth {np.min(w)} <= {EPSILON_DEPTH}")
    # Normalize first so the zero-distortion fisheye path is bitwise equal.
    i = k.fx * (c[..., 0] / w) + k.i0
    j = k.fy * (c[..., 1] / w) + k.j0
    return np.stack([i, j], axis=-1)


def _distort(un, vn, k: FisheyeIntrinsics):
    """Apply radial + tangential distortion to normalized coordinates."""
    r2 = un * un + vn * vn
    radial = 1.0 + k.k1 * r2 + k.k2 * r2 * r2 + k.k5 * r2 * r2 * r2
    xd_x = radial * un + (2.0 * k.k3 * un * vn + k.k4 * (r2 + 2.0 * un * un))
    xd_y = radial * vn + (k.k3 * (r2 + 2.0 * vn * vn) + 2.0 * k.k4 * un * vn)
    return xd_x, xd_y


def project_fisheye(c: np.ndarray, k: FisheyeIntrinsics) -> np.ndarray:
    """Project camera-frame points through the distorted model.

    Normalized coordinates are distorted first, then mapped through the
    affine (focal, skew, principal point) matrix.  Raises BehindCamera if
    any depth w <= EPSILON_DEPTH.
    """
    c = np.asarray(c, dtype=float)
    w = c[..., 2]
    if np.any(w <= EPSILON_DEPTH):
        raise BehindCamera(f"depth {np.min(w)} <= {EPSILON_DEPTH}")
    un = c[..., 0] / w
    vn = c[..., 1] / w
    xd_x, xd_y = _distort(un, vn, k)
    i = k.fx * xd_x + k.alpha_c * k.fx * xd_y + k.i0
    j = k.fy * xd_y + k.j0
    return np.stack([i, j], axis=-1)


def project_intrinsic(c: np.ndarray, camera: CameraModel) -> np.ndarray:
    if isinstance(camera, FisheyeIntrinsics):
        return project_fisheye(c, camera)
    return project_pinhole(c, camera)


def project(p: np.ndarray, cal: Calibration) -> np.ndarray:
    """Full LiDAR -> pixel projection; raises BehindCamera when not imageable."""
    return project_intrinsic(extrinsic_transform(p, cal.extrinsic), cal.camera)


def project_points(p: np.ndarray, cal: Calibration) -> Tuple[np.ndarray, np.ndarray]:
    """Non-raising batch projection.

    Returns (pixels, visible) where rows with visible == False carry NaN
    pixels (the point is behind the camera).
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    cam = extrinsic_transform(p, cal.extrinsic)
    w = cam[:, 2]
    visible = w > EPSILON_DEPTH
    safe = cam.copy()
    safe[~visible, 2] = 1.0
    pix = project_intrinsic(safe, cal.camera)
    pix[~visible] = np.nan
    return pix, visible


def reprojection_error(points: np.ndarray, pixels: np.ndarray, cal: Calibration) -> float:
    """Mean Euclidean pixel distance between projections and annotations.

    Pairs whose point falls behind the camera contribute a fixed
    BEHIND_CAMERA_PENALTY_PX each instead of aborting the evaluation.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    pixels = np.atleast_2d(np.asarray(pixels, dtype=float))
    if points.shape[0] == 0:
        raise EmptyInput("reprojection_error needs at least one pair")
    proj, visible = project_points(points, cal)
    d = np.hypot(proj[:, 0] - pixels[:, 0], proj[:, 1] - pixels[:, 1])
    d[~visible] = BEHIND_CAMERA_PENALTY_PX
    return float(d.mean())


def camera_angles(points: np.ndarray, cal: Calibration) -> np.ndarray:
    """Angle of each point's camera-frame ray to the optical axis."""
    cam = extrinsic_transform(np.atleast_2d(np.asarray(points, dtype=float)),
                              cal.extrinsic)
    return np.arctan2(np.hypot(cam[:, 0], cam[:, 1]), cam[:, 2])


@dataclass(frozen=True)
class AngleBin:
    """One bucket of the error-vs-angle analysis; mean_error is None if empty."""

    lower: float
    upper: float
    count: int
    mean_error: Optional[float]


def error_by_angle(points: np.ndarray, pixels: np.ndarray, cal: Calibration,
                   bins: int) -> List[AngleBin]:
    """Bucket pairs by angle to the camera normal and average per-bin error.

    Buckets are uniform over [0, max angle]; empty buckets report a None
    mean.  Behind-camera pairs carry the fixed penalty error.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    pixels = np.atleast_2d(np.asarray(pixels, dtype=float))
    if points.shape[0] == 0:
        raise EmptyInput("error_by_angle needs at least one pair")
    angles = camera_angles(points, cal)
    proj, visible = project_points(points, cal)
    err = np.hypot(proj[:, 0] - pixels[:, 0], proj[:, 1] - pixels[:, 1])
    err[~visible] = BEHIND_CAMERA_PENALTY_PX
    amax = float(angles.max())
    if amax > 0:
        idx = np.minimum((angles / amax * bins).astype(int), bins - 1)
        width = amax / bins
    else:
        idx = np.zeros(len(angles), dtype=int)
        width = 0.0
    out = []
    for b in range(bins):
        mask = idx == b
        n = int(mask.sum())
        mean = float(err[mask].mean()) if n else None
        out.append(AngleBin(lower=b * width, upper=(b + 1) * width,
                            count=n, mean_error=mean))
    return out
