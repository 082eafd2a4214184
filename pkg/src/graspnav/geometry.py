"""Core 3D geometry: rigid poses, pinhole cameras, plane fitting, sampling.

Conventions used throughout the package:
    * World and camera frames are right handed, units are meters.
    * Camera frame: x right, y down, z forward (optical axis). A camera
      pose maps camera-frame coordinates into the world frame.
    * Pixel coordinates (u, v) are continuous, u along image columns,
      v along rows. The valid domain is the half-open box
      [0, width) x [0, height).
    * Rotation matrices act on column vectors; stored row-major.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    BehindCameraError,
    DegenerateInputError,
    InvalidDepthError,
    InvalidRotationError,
    NoPlaneFoundError,
    OutOfBoundsError,
)

# Orthonormality tolerance for accepting a matrix as a rotation.
ROTATION_TOL = 1e-6
# Below this squared length a direction vector counts as zero.
ZERO_LENGTH_SQ = 1e-24

_RANSAC_CHUNK = 256  # hypothesis planes scored per vectorized block


def _as_points(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise DegenerateInputError(f"expected an (N, 3) point array, got shape {pts.shape}")
    return pts


class Pose:
    """Rigid transform: p_out = rotation @ p_in + translation."""

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation: np.ndarray, translation: np.ndarray):
        rot = np.asarray(rotation, dtype=np.float64)
        tra = np.asarray(translation, dtype=np.float64).reshape(-1)
        if rot.shape != (3, 3):
            raise InvalidRotationError(f"rotation must be 3x3, got {rot.shape}")
        if tra.shape != (3,):
            raise ValueError(f"translation must have 3 components, got {tra.shape}")
        err = np.max(np.abs(rot @ rot.T - np.eye(3)))
        if err > ROTATION_TOL:
            raise InvalidRotationError(f"matrix is not orthonormal (max |R R^T - I| = {err:.3g})")
        det = float(np.linalg.det(rot))
        if abs(det - 1.0) > ROTATION_TOL:
            raise InvalidRotationError(f"matrix is not a proper rotation (det = {det:.9f})")
        self.rotation = rot
        self.translation = tra

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "Pose":
        """Build from a 4x4 homogeneous matrix (last row 0 0 0 1)."""
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (4, 4):
            raise InvalidRotationError(f"homogeneous matrix must be 4x4, got {m.shape}")
        if np.max(np.abs(m[3] - np.array([0.0, 0.0, 0.0, 1.0]))) > ROTATION_TOL:
            raise InvalidRotationError("last row of homogeneous matrix must be (0, 0, 0, 1)")
        return cls(m[:3, :3], m[:3, 3])

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "Pose") -> "Pose":
        """Transform applying `other` first, then `self`."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -(rt @ self.translation))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Apply to one (3,) point or an (N, 3) batch."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            return self.rotation @ pts + self.translation
        return pts @ self.rotation.T + self.translation

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Pose(t={np.array2string(self.translation, precision=4)})"


def rotation_about_z(angle: float) -> np.ndarray:
    """Rotation matrix for a yaw about the world +z axis."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def look_at(eye: np.ndarray, target: np.ndarray, up: np.ndarray | None = None) -> Pose:
    """Camera pose at `eye` with the optical axis through `target`.

    Uses the x-right / y-down / z-forward camera convention; `up` is the
    world direction that should map to image-up (negative v).
    """
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    up = np.array([0.0, 0.0, 1.0]) if up is None else np.asarray(up, dtype=np.float64)
    fwd = target - eye
    n = np.linalg.norm(fwd)
    if n * n < ZERO_LENGTH_SQ:
        raise DegenerateInputError("look_at target coincides with eye")
    z = fwd / n
    x = np.cross(z, up)
    nx = np.linalg.norm(x)
    if nx * nx < ZERO_LENGTH_SQ:
        # optical axis parallel to up; fall back to world x as the up hint
        x = np.cross(z, np.array([1.0, 0.0, 0.0]))
        nx = np.linalg.norm(x)
    x = x / nx
    y = np.cross(z, x)
    rot = np.stack([x, y, z], axis=1)
    return Pose(rot, eye)


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics; fx, fy, cx, cy in pixels, image size in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError(
                f"principal point ({self.cx}, {self.cy}) outside image "
                f"{self.width}x{self.height}"
            )

    def contains(self, u: float, v: float) -> bool:
        return 0.0 <= u < self.width and 0.0 <= v < self.height

    def to_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        try:
            return cls(fx=float(d["fx"]), fy=float(d["fy"]), cx=float(d["cx"]),
                       cy=float(d["cy"]), width=int(d["width"]), height=int(d["height"]))
        except KeyError as exc:
            raise ValueError(f"intrinsics block missing field {exc}") from exc


@dataclass(frozen=True)
class BBox2D:
    """Axis-aligned pixel box with continuous coordinates, xmin <= xmax."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise ValueError(
                f"invalid bbox ({self.xmin}, {self.ymin}, {self.xmax}, {self.ymax})"
            )

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))

    def intersection_area(self, other: "BBox2D") -> float:
        w = min(self.xmax, other.xmax) - max(self.xmin, other.xmin)
        h = min(self.ymax, other.ymax) - max(self.ymin, other.ymin)
        if w <= 0.0 or h <= 0.0:
            return 0.0
        return w * h

    def translated(self, dx: float, dy: float) -> "BBox2D":
        return BBox2D(self.xmin + dx, self.ymin + dy, self.xmax + dx, self.ymax + dy)

    def as_list(self) -> list[float]:
        return [self.xmin, self.ymin, self.xmax, self.ymax]


@dataclass(frozen=True)
class Plane:
    """Plane normal . p = offset with a unit normal."""

    normal: np.ndarray
    offset: float
    inlier_count: int = 0

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64).reshape(3)
        ln = float(np.linalg.norm(n))
        if abs(ln - 1.0) > 1e-9:
            raise ValueError(f"plane normal must be unit length, got |n| = {ln}")
        object.__setattr__(self, "normal", n)

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.normal - self.offset


@dataclass(frozen=True)
class RansacParams:
    """Tuning for plane search: inlier threshold (m), iterations, min fraction."""

    threshold: float = 0.005
    iterations: int = 1000
    min_inlier_fraction: float = 0.3

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not 0.0 <= self.min_inlier_fraction <= 1.0:
            raise ValueError(f"min_inlier_fraction must be in [0, 1], got {self.min_inlier_fraction}")

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "iterations": self.iterations,
                "min_inlier_fraction": self.min_inlier_fraction}

    @classmethod
    def from_dict(cls, d: dict) -> "RansacParams":
        known = {"threshold", "iterations", "min_inlier_fraction"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown ransac config keys: {sorted(unknown)}")
        return cls(**d)


class PointIndex:
    """Immutable nearest-neighbor index over an (N, 3) point set."""

    def __init__(self, points: np.ndarray):
        self._points = _as_points(points).copy()
        self._points.setflags(write=False)
        self._tree = cKDTree(self._points) if len(self._points) else None

    @property
    def points(self) -> np.ndarray:
        return self._points

    def __len__(self) -> int:
        return len(self._points)

    def nearest(self, point: np.ndarray) -> tuple[float, int]:
        """Distance and index of the closest stored point."""
        if self._tree is None:
            raise DegenerateInputError("index holds no points")
        dist, idx = self._tree.query(np.asarray(point, dtype=np.float64))
        return float(dist), int(idx)

    def ball(self, point: np.ndarray, radius: float) -> np.ndarray:
        """Indices of points within `radius` of `point`."""
        if self._tree is None:
            return np.empty(0, dtype=np.intp)
        idx = self._tree.query_ball_point(np.asarray(point, dtype=np.float64), radius)
        return np.asarray(idx, dtype=np.intp)


# ---------------------------------------------------------------------------
# Pinhole projection
# ---------------------------------------------------------------------------

def backproject(u: float, v: float, depth: float, intrinsics: CameraIntrinsics,
                cam_pose: Pose) -> np.ndarray:
    """Lift a pixel with known depth to a world point.

    Args:
        u, v: pixel coordinates, required to lie in [0, width) x [0, height).
        depth: camera-frame z of the observed surface, strictly positive.
        intrinsics: pinhole parameters.
        cam_pose: world-from-camera transform.

    Returns:
        (3,) world point.
    """
    if depth <= 0.0:
        raise InvalidDepthError(f"depth must be positive, got {depth}")
    if not intrinsics.contains(u, v):
        raise OutOfBoundsError(
            f"pixel ({u}, {v}) outside image {intrinsics.width}x{intrinsics.height}"
        )
    p_cam = np.array([
        (u - intrinsics.cx) * depth / intrinsics.fx,
        (v - intrinsics.cy) * depth / intrinsics.fy,
        depth,
    ])
    return cam_pose.apply(p_cam)


def backproject_many(us: np.ndarray, vs: np.ndarray, depths: np.ndarray,
                     intrinsics: CameraIntrinsics, cam_pose: Pose) -> np.ndarray:
    """Vectorized backprojection; assumes callers validated bounds and depths."""
    us = np.asarray(us, dtype=np.float64)
    vs = np.asarray(vs, dtype=np.float64)
    depths = np.asarray(depths, dtype=np.float64)
    p_cam = np.stack([
        (us - intrinsics.cx) * depths / intrinsics.fx,
        (vs - intrinsics.cy) * depths / intrinsics.fy,
        depths,
    ], axis=-1)
    return cam_pose.apply(p_cam)


def project(point: np.ndarray, intrinsics: CameraIntrinsics,
            cam_pose: Pose) -> tuple[float, float, float]:
    """Project a world point through the camera; returns (u, v, depth).

    Raises BehindCameraError when the point has camera-frame z <= 0. The
    returned pixel may fall outside the image; callers clip as needed.
    """
    p_cam = cam_pose.inverse().apply(np.asarray(point, dtype=np.float64))
    z = float(p_cam[2])
    if z <= 0.0:
        raise BehindCameraError(f"point has camera-frame depth {z}")
    u = intrinsics.fx * float(p_cam[0]) / z + intrinsics.cx
    v = intrinsics.fy * float(p_cam[1]) / z + intrinsics.cy
    return (u, v, z)


def project_many(points: np.ndarray, intrinsics: CameraIntrinsics,
                 cam_pose: Pose) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized projection; callers must handle nonpositive depths themselves."""
    p_cam = cam_pose.inverse().apply(_as_points(points))
    z = p_cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = intrinsics.fx * p_cam[:, 0] / z + intrinsics.cx
        v = intrinsics.fy * p_cam[:, 1] / z + intrinsics.cy
    return u, v, z


# ---------------------------------------------------------------------------
# Plane fitting
# ---------------------------------------------------------------------------

def _lstsq_plane(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Total least-squares plane through `points`: unit normal and offset."""
    centroid = points.mean(axis=0)
    centered = points - centroid
    # Smallest right singular vector spans the residual direction.
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    normal = vt[-1]
    normal = normal / np.linalg.norm(normal)
    return normal, float(normal @ centroid)


def ransac_plane(points: np.ndarray, params: RansacParams = RansacParams(),
                 seed: int = 0) -> Plane:
    """Fit the dominant plane by seeded RANSAC with a least-squares refit.

    Samples `params.iterations` point triplets, keeps the hypothesis with
    the most points within `params.threshold` of it (first hypothesis wins
    ties), refits that hypothesis by total least squares on its inliers,
    and reports the inlier count of the refit plane.

    Raises:
        DegenerateInputError: fewer than 3 points, or all points collinear.
        NoPlaneFoundError: the best plane captures less than
            `params.min_inlier_fraction` of the points.
    """
    pts = _as_points(points)
    n = len(pts)
    if n < 3:
        raise DegenerateInputError(f"plane fit needs at least 3 points, got {n}")
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[1] <= 1e-12 * max(sv[0], 1.0):
        raise DegenerateInputError("points are collinear; no unique plane exists")

    rng = np.random.default_rng(seed)
    triplets = rng.integers(0, n, size=(params.iterations, 3))
    a = pts[triplets[:, 0]]
    normals = np.cross(pts[triplets[:, 1]] - a, pts[triplets[:, 2]] - a)
    lengths = np.linalg.norm(normals, axis=1)
    valid = lengths > 1e-12
    if not np.any(valid):
        raise NoPlaneFoundError("all sampled triplets were degenerate")
    normals[valid] /= lengths[valid, None]
    offsets = np.einsum("ij,ij->i", normals, a)

    best_count = -1
    best_iter = -1
    for lo in range(0, params.iterations, _RANSAC_CHUNK):
        hi = min(lo + _RANSAC_CHUNK, params.iterations)
        block = valid[lo:hi]
        if not np.any(block):
            continue
        dist = np.abs(pts @ normals[lo:hi].T - offsets[lo:hi])  # (n, chunk)
        counts = np.count_nonzero(dist <= params.threshold, axis=0)
        counts[~block] = -1
        k = int(np.argmax(counts))
        if counts[k] > best_count:
            best_count = int(counts[k])
            best_iter = lo + k

    inliers = np.abs(pts @ normals[best_iter] - offsets[best_iter]) <= params.threshold
    normal, offset = _lstsq_plane(pts[inliers])
    final_count = int(np.count_nonzero(np.abs(pts @ normal - offset) <= params.threshold))
    if final_count < params.min_inlier_fraction * n:
        raise NoPlaneFoundError(
            f"best plane has {final_count}/{n} inliers, below fraction "
            f"{params.min_inlier_fraction}"
        )
    return Plane(normal=normal, offset=offset, inlier_count=final_count)


# ---------------------------------------------------------------------------
# Sampling and visibility
# ---------------------------------------------------------------------------

def farthest_point_sample(candidates: np.ndarray, k: int, start_index: int = 0) -> list[int]:
    """Greedy farthest-point subset of `candidates`.

    Starts at `start_index`, then repeatedly adds the candidate whose
    distance to the chosen set is largest; exact ties go to the lowest
    index. Returns the k chosen indices in selection order.
    """
    pts = _as_points(candidates)
    n = len(pts)
    if not 1 <= k <= n:
        raise OutOfBoundsError(f"k must be in [1, {n}], got {k}")
    if not 0 <= start_index < n:
        raise OutOfBoundsError(f"start_index must be in [0, {n}), got {start_index}")
    chosen = [start_index]
    min_d = np.linalg.norm(pts - pts[start_index], axis=1)
    min_d[start_index] = -1.0  # never re-selected
    for _ in range(k - 1):
        nxt = int(np.argmax(min_d))  # argmax takes the first max: lowest index
        chosen.append(nxt)
        d = np.linalg.norm(pts - pts[nxt], axis=1)
        np.minimum(min_d, d, out=min_d)
        min_d[nxt] = -1.0
    return chosen


def line_of_sight(from_point: np.ndarray, to_point: np.ndarray,
                  obstacles: "PointIndex | np.ndarray", clearance: float,
                  target_exclusion: float = 0.0) -> bool:
    """True when the open segment keeps `clearance` from every obstacle.

    Obstacle points within `target_exclusion` of `to_point` are ignored,
    so a target surface never blocks the view of its own center. The test
    is an exact point-to-segment distance; a point at exactly `clearance`
    blocks. Monotone: shrinking `clearance` never turns a clear view
    blocked.
    """
    if clearance < 0:
        raise ValueError(f"clearance must be nonnegative, got {clearance}")
    a = np.asarray(from_point, dtype=np.float64)
    b = np.asarray(to_point, dtype=np.float64)
    d = b - a
    seg_len_sq = float(d @ d)
    if seg_len_sq < ZERO_LENGTH_SQ:
        return True  # empty open segment

    if isinstance(obstacles, PointIndex):
        if len(obstacles) == 0:
            return True
        # Prune with a ball around the segment midpoint before the exact test.
        mid = 0.5 * (a + b)
        radius = 0.5 * math.sqrt(seg_len_sq) + clearance + 1e-9
        pts = obstacles.points[obstacles.ball(mid, radius)]
    else:
        pts = _as_points(obstacles)
    if len(pts) == 0:
        return True

    if target_exclusion > 0.0:
        keep = np.linalg.norm(pts - b, axis=1) > target_exclusion
        pts = pts[keep]
        if len(pts) == 0:
            return True

    t = np.clip((pts - a) @ d / seg_len_sq, 0.0, 1.0)
    closest = a + t[:, None] * d
    dist_sq = np.sum((pts - closest) ** 2, axis=1)
    return bool(np.min(dist_sq) > clearance * clearance)
