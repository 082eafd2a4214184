"""Drawer perception: handle matching, axis estimation, view fusion, pulls.

A detection frame carries 2-D handle and drawer boxes plus a depth image.
Handles are matched to drawer fronts by minimum-cost assignment where
pairing handle h with drawer d costs

    C(h, d) = -(kappa * IoA(h, d) + Conf(d))

and IoA is the overlap area normalized by the handle box area, so a
handle fully inside its drawer front scores 1 regardless of how much
larger the front is. Unmatched rows and columns are absorbed by sentinel
padding. From each matched pair we read a 3-D handle center (median
depth inside the handle box) and an axis of motion (outward normal of
the drawer front plane, fit by RANSAC on the depth points around the
handle). Per-view estimates are fused by greedy confidence-ordered
clustering, and a fused target can be turned into a base placement plus
a straight pull segment, or refined from a close-range frame.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (ConfigError, DegenerateBBoxError, DegenerateInputError,
                     FileFormatError, GraspNavError, InvalidAxisError,
                     MissingDepthError, NoPlaneFoundError)
from .geometry import (BBox2D, CameraIntrinsics, Plane, Pose, RansacParams,
                       backproject, backproject_many, ransac_plane,
                       rotation_about_z)

DEFAULT_KAPPA = 10.0
DEFAULT_IOA_MIN = 0.5
DEFAULT_CLUSTER_RADIUS = 0.10
DEFAULT_GATE_RADIUS = 0.15
DEFAULT_STANDOFF = 0.7
DEFAULT_PULL_DISTANCE = 0.25

# padding cost for unmatched rows/columns in the square assignment problem
UNMATCHED_COST = 1.0e6

# axes steeper than 30 degrees from the horizontal plane are not pullable
_MAX_VERTICAL_DOT = math.cos(math.pi / 6.0)

HANDLE = "handle"
DRAWER = "drawer"
_CLASSES = (HANDLE, DRAWER)


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Detection2D:
    """One detector output: a class-labelled box with a confidence."""

    class_label: str
    bbox: BBox2D
    confidence: float

    def __post_init__(self):
        if self.class_label not in _CLASSES:
            raise ValueError(
                f"class must be one of {_CLASSES}, got {self.class_label!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")

    def to_dict(self) -> dict:
        return {"class": self.class_label, "bbox": self.bbox.as_list(),
                "confidence": self.confidence}


@dataclass
class DetectionFrame:
    """Detections plus the depth image and camera they were observed with."""

    intrinsics: CameraIntrinsics
    cam_pose: Pose                     # world <- camera
    depth: np.ndarray                  # (height, width), meters, 0 = invalid
    detections: list[Detection2D] = field(default_factory=list)

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=np.float64)
        expected = (self.intrinsics.height, self.intrinsics.width)
        if self.depth.shape != expected:
            raise ValueError(
                f"depth shape {self.depth.shape} does not match intrinsics {expected}")
        if np.any(self.depth < 0):
            raise ValueError("depth image contains negative values")

    @property
    def handles(self) -> list[Detection2D]:
        return [d for d in self.detections if d.class_label == HANDLE]

    @property
    def drawers(self) -> list[Detection2D]:
        return [d for d in self.detections if d.class_label == DRAWER]


@dataclass(frozen=True)
class MatchedPair:
    """A handle assigned to a drawer front, with the assignment terms."""

    handle: Detection2D
    drawer: Detection2D
    handle_index: int
    drawer_index: int
    ioa: float
    cost: float


@dataclass(frozen=True)
class ViewTarget:
    """One view's estimate of a drawer: handle center, axis, confidence."""

    center: np.ndarray                 # (3,) world
    axis: np.ndarray                   # (3,) unit, out of the drawer front
    confidence: float
    plane_inliers: int = 1


@dataclass(frozen=True)
class DrawerTarget:
    """A fused drawer estimate across views."""

    handle_center: np.ndarray
    axis: np.ndarray
    supporting_views: int
    plane_inliers: int
    total_confidence: float

    def to_dict(self) -> dict:
        return {"handle_center": [float(x) for x in self.handle_center],
                "axis": [float(x) for x in self.axis],
                "supporting_views": self.supporting_views,
                "plane_inliers": self.plane_inliers,
                "total_confidence": self.total_confidence}


@dataclass(frozen=True)
class PullPlan:
    """Where to stand and the straight-line handle motion for the pull."""

    body_pose: Pose
    pull_from: np.ndarray
    pull_to: np.ndarray


@dataclass(frozen=True)
class DrawerConfig:
    """Tuning for matching, fusion, and pull planning."""

    kappa: float = DEFAULT_KAPPA
    ioa_min: float = DEFAULT_IOA_MIN
    cluster_radius: float = DEFAULT_CLUSTER_RADIUS
    gate_radius: float = DEFAULT_GATE_RADIUS
    standoff: float = DEFAULT_STANDOFF
    pull_distance: float = DEFAULT_PULL_DISTANCE
    ransac: RansacParams = field(default_factory=RansacParams)

    def __post_init__(self):
        if self.kappa <= 0:
            raise ConfigError(f"kappa must be positive, got {self.kappa}")
        if not 0.0 <= self.ioa_min <= 1.0:
            raise ConfigError(f"ioa_min must be in [0, 1], got {self.ioa_min}")
        for name in ("cluster_radius", "gate_radius", "standoff", "pull_distance"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "ioa_min": self.ioa_min,
                "cluster_radius": self.cluster_radius,
                "gate_radius": self.gate_radius, "standoff": self.standoff,
                "pull_distance": self.pull_distance,
                "ransac": self.ransac.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "DrawerConfig":
        known = {"kappa", "ioa_min", "cluster_radius", "gate_radius",
                 "standoff", "pull_distance", "ransac"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown drawer config keys: {sorted(unknown)}")
        d = dict(d)
        try:
            ransac = RansacParams.from_dict(d.pop("ransac", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad ransac block: {exc}") from exc
        return cls(ransac=ransac, **d)


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------

def ioa(handle: BBox2D, drawer: BBox2D) -> float:
    """Intersection area over the handle box area."""
    area = handle.area
    if area <= 0.0:
        raise DegenerateBBoxError(f"handle box has zero area: {handle}")
    return handle.intersection_area(drawer) / area


def assignment_costs(handles: Sequence[Detection2D], drawers: Sequence[Detection2D],
                     kappa: float = DEFAULT_KAPPA) -> np.ndarray:
    """Pairwise costs -(kappa * IoA + drawer confidence), shape (H, D)."""
    costs = np.empty((len(handles), len(drawers)), dtype=np.float64)
    for i, h in enumerate(handles):
        for j, d in enumerate(drawers):
            costs[i, j] = -(kappa * ioa(h.bbox, d.bbox) + d.confidence)
    return costs


def solve_assignment(costs: np.ndarray) -> list[tuple[int, int]]:
    """Minimum-cost row/column pairing of a rectangular cost matrix.

    The matrix is padded to square with a large sentinel so every real row
    and column may go unmatched at the same fixed price; only real pairs
    are returned, ordered by row index.
    """
    costs = np.asarray(costs, dtype=np.float64)
    n_rows, n_cols = costs.shape
    if n_rows == 0 or n_cols == 0:
        return []
    size = max(n_rows, n_cols)
    padded = np.full((size, size), UNMATCHED_COST)
    padded[:n_rows, :n_cols] = costs
    rows, cols = linear_sum_assignment(padded)
    pairs = [(int(r), int(c)) for r, c in zip(rows, cols)
             if r < n_rows and c < n_cols and padded[r, c] < UNMATCHED_COST]
    pairs.sort()
    return pairs


def match_handles_to_drawers(handles: Sequence[Detection2D],
                             drawers: Sequence[Detection2D],
                             kappa: float = DEFAULT_KAPPA,
                             ioa_min: float = DEFAULT_IOA_MIN) -> list[MatchedPair]:
    """Assign handles to drawer fronts, dropping weakly overlapping pairs."""
    if not handles or not drawers:
        return []
    costs = assignment_costs(handles, drawers, kappa)
    out = []
    for i, j in solve_assignment(costs):
        overlap = ioa(handles[i].bbox, drawers[j].bbox)
        if overlap < ioa_min:
            continue
        out.append(MatchedPair(handle=handles[i], drawer=drawers[j],
                               handle_index=i, drawer_index=j,
                               ioa=overlap, cost=float(costs[i, j])))
    return out


# ---------------------------------------------------------------------------
# Metric lifting
# ---------------------------------------------------------------------------

def _pixel_rect(bbox: BBox2D, intrinsics: CameraIntrinsics) -> tuple[int, int, int, int]:
    """Integer pixel rect covered by a box, clipped to the image; lo > hi when empty."""
    u_lo = max(0, math.floor(bbox.xmin))
    v_lo = max(0, math.floor(bbox.ymin))
    u_hi = min(intrinsics.width - 1, math.ceil(bbox.xmax) - 1)
    v_hi = min(intrinsics.height - 1, math.ceil(bbox.ymax) - 1)
    return u_lo, v_lo, u_hi, v_hi


def handle_center_3d(pair: MatchedPair, frame: DetectionFrame) -> np.ndarray:
    """Backproject the handle box center at the median depth inside the box."""
    u_lo, v_lo, u_hi, v_hi = _pixel_rect(pair.handle.bbox, frame.intrinsics)
    if u_lo > u_hi or v_lo > v_hi:
        raise MissingDepthError("handle box lies outside the image")
    patch = frame.depth[v_lo:v_hi + 1, u_lo:u_hi + 1]
    valid = patch[patch > 0.0]
    if valid.size == 0:
        raise MissingDepthError("no valid depth inside the handle box")
    depth = float(np.median(valid))
    cu, cv = pair.handle.bbox.center
    cu = min(max(cu, 0.0), frame.intrinsics.width - 1.0)
    cv = min(max(cv, 0.0), frame.intrinsics.height - 1.0)
    return backproject(cu, cv, depth, frame.intrinsics, frame.cam_pose)


def estimate_axis(pair: MatchedPair, frame: DetectionFrame,
                  ransac: RansacParams = RansacParams(),
                  seed: int = 0) -> tuple[np.ndarray, int]:
    """Axis of motion: outward normal of the drawer front plane.

    Fits a plane to the depth points inside the drawer box but outside the
    handle box (the handle sticks out of the front), then orients the
    normal toward the camera. Returns the unit axis and the plane's inlier
    count.
    """
    du_lo, dv_lo, du_hi, dv_hi = _pixel_rect(pair.drawer.bbox, frame.intrinsics)
    if du_lo > du_hi or dv_lo > dv_hi:
        raise DegenerateInputError("drawer box lies outside the image")
    us, vs = np.meshgrid(np.arange(du_lo, du_hi + 1), np.arange(dv_lo, dv_hi + 1))
    us = us.ravel()
    vs = vs.ravel()
    hb = pair.handle.bbox
    in_handle = ((us >= hb.xmin) & (us <= hb.xmax)
                 & (vs >= hb.ymin) & (vs <= hb.ymax))
    depths = frame.depth[vs, us]
    keep = ~in_handle & (depths > 0.0)
    if int(np.count_nonzero(keep)) < 3:
        raise DegenerateInputError(
            "fewer than 3 depth points around the handle to fit the front plane")
    points = backproject_many(us[keep], vs[keep], depths[keep],
                              frame.intrinsics, frame.cam_pose)
    plane = ransac_plane(points, ransac, seed=seed)
    axis = np.asarray(plane.normal, dtype=np.float64).copy()
    toward_camera = frame.cam_pose.translation - points.mean(axis=0)
    if float(axis @ toward_camera) < 0.0:
        axis = -axis
    return axis, plane.inlier_count


def view_target(pair: MatchedPair, frame: DetectionFrame,
                ransac: RansacParams = RansacParams(),
                seed: int = 0) -> ViewTarget:
    """Lift one matched pair to a 3-D per-view drawer estimate."""
    center = handle_center_3d(pair, frame)
    axis, inliers = estimate_axis(pair, frame, ransac, seed=seed)
    return ViewTarget(center=center, axis=axis,
                      confidence=pair.drawer.confidence, plane_inliers=inliers)


# ---------------------------------------------------------------------------
# Fusion and planning
# ---------------------------------------------------------------------------

def fuse_views(per_view: Sequence[ViewTarget],
               cluster_radius: float = DEFAULT_CLUSTER_RADIUS) -> list[DrawerTarget]:
    """Cluster per-view estimates into distinct drawers.

    Estimates are visited in decreasing confidence order; each unclaimed
    estimate seeds a cluster and claims every unclaimed estimate within
    `cluster_radius` of its center. Cluster centers and axes are
    confidence-weighted means, axes hemisphere-aligned to the seed before
    averaging. Output is ordered by total cluster confidence, descending.
    """
    n = len(per_view)
    if n == 0:
        return []
    order = sorted(range(n), key=lambda i: (-per_view[i].confidence, i))
    claimed = [False] * n
    clusters: list[DrawerTarget] = []
    for seed_idx in order:
        if claimed[seed_idx]:
            continue
        seed = per_view[seed_idx]
        members = []
        for j in order:
            if claimed[j]:
                continue
            if np.linalg.norm(per_view[j].center - seed.center) <= cluster_radius:
                claimed[j] = True
                members.append(per_view[j])
        weight = sum(m.confidence for m in members)
        if weight <= 0.0:
            # all-zero confidence cluster, fall back to a plain mean
            center = np.mean([m.center for m in members], axis=0)
            axis = seed.axis
        else:
            center = sum(m.confidence * m.center for m in members) / weight
            axis = np.zeros(3)
            for m in members:
                flip = -1.0 if float(m.axis @ seed.axis) < 0.0 else 1.0
                axis = axis + m.confidence * flip * m.axis
            norm = np.linalg.norm(axis)
            axis = seed.axis if norm < 1e-12 else axis / norm
        clusters.append(DrawerTarget(
            handle_center=center, axis=axis, supporting_views=len(members),
            plane_inliers=sum(m.plane_inliers for m in members),
            total_confidence=weight))
    clusters.sort(key=lambda c: -c.total_confidence)
    return clusters


def plan_pull(target: DrawerTarget, standoff: float = DEFAULT_STANDOFF,
              pull_distance: float = DEFAULT_PULL_DISTANCE) -> PullPlan:
    """Base placement on the axis, facing the handle, plus the pull segment.

    Drawers travel horizontally, so the axis is projected to the ground
    plane; axes within 30 degrees of vertical are rejected as unpullable.
    The base stands `standoff` out along the projected axis at ground
    height, and the pull drags the handle `pull_distance` further out.
    """
    axis = np.asarray(target.axis, dtype=np.float64)
    if abs(axis[2]) > _MAX_VERTICAL_DOT:
        raise InvalidAxisError(
            f"axis {axis.tolist()} is within 30 degrees of vertical")
    horizontal = np.array([axis[0], axis[1], 0.0])
    horizontal /= np.linalg.norm(horizontal)
    center = np.asarray(target.handle_center, dtype=np.float64)
    stand = center + standoff * horizontal
    yaw = math.atan2(-horizontal[1], -horizontal[0])
    body = Pose(rotation_about_z(yaw), np.array([stand[0], stand[1], 0.0]))
    return PullPlan(body_pose=body, pull_from=center.copy(),
                    pull_to=center + pull_distance * horizontal)


def refine_target(initial: DrawerTarget, close_frame: DetectionFrame, *,
                  gate_radius: float = DEFAULT_GATE_RADIUS,
                  kappa: float = DEFAULT_KAPPA,
                  ioa_min: float = DEFAULT_IOA_MIN,
                  ransac: RansacParams = RansacParams(),
                  seed: int = 0) -> tuple[DrawerTarget, bool]:
    """Re-estimate center and axis from a close-range frame, best effort.

    The close frame's matched pair nearest the initial center wins if it
    lies within `gate_radius`; otherwise, or when matching or plane
    fitting fails, the initial target is returned unchanged with a False
    flag.
    """
    pairs = match_handles_to_drawers(close_frame.handles, close_frame.drawers,
                                     kappa=kappa, ioa_min=ioa_min)
    candidates = []
    for pair in pairs:
        try:
            center = handle_center_3d(pair, close_frame)
        except MissingDepthError:
            continue
        candidates.append((pair, center))
    if not candidates:
        return initial, False
    dists = [np.linalg.norm(c - initial.handle_center) for _, c in candidates]
    best = int(np.argmin(dists))
    if dists[best] > gate_radius:
        return initial, False
    pair, center = candidates[best]
    try:
        axis, inliers = estimate_axis(pair, close_frame, ransac, seed=seed)
    except (DegenerateInputError, NoPlaneFoundError):
        return initial, False
    refined = replace(initial, handle_center=center, axis=axis,
                      plane_inliers=inliers)
    return refined, True


# ---------------------------------------------------------------------------
# Frame I/O
# ---------------------------------------------------------------------------

def _frame_error(path: Path, detail: str) -> FileFormatError:
    return FileFormatError(f"{path}: {detail}")


def load_detection_frame(path: str | Path) -> DetectionFrame:
    """Read a detection frame: JSON metadata plus a raw float32 depth file.

    The depth file path is resolved relative to the JSON file. Depth is
    row-major little-endian float32, one value per pixel, 0 where invalid.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise _frame_error(path, f"invalid JSON ({exc})") from exc
    for key in ("intrinsics", "cam_pose", "depth_file", "detections"):
        if key not in raw:
            raise _frame_error(path, f"missing required key {key!r}")
    try:
        intrinsics = CameraIntrinsics.from_dict(raw["intrinsics"])
    except (TypeError, ValueError) as exc:
        raise _frame_error(path, f"bad intrinsics: {exc}") from exc
    pose_values = raw["cam_pose"]
    if not isinstance(pose_values, list) or len(pose_values) != 16:
        raise _frame_error(path, "cam_pose must be 16 row-major floats")
    try:
        cam_pose = Pose.from_matrix(np.array(pose_values, dtype=np.float64).reshape(4, 4))
    except (ValueError, GraspNavError) as exc:
        raise _frame_error(path, f"bad cam_pose: {exc}") from exc
    depth_path = path.parent / raw["depth_file"]
    if not depth_path.exists():
        raise _frame_error(path, f"depth file not found: {raw['depth_file']}")
    depth = np.fromfile(depth_path, dtype="<f4").astype(np.float64)
    expected = intrinsics.width * intrinsics.height
    if depth.size != expected:
        raise _frame_error(
            path, f"depth file has {depth.size} values, expected {expected}")
    if np.any(depth < 0):
        raise _frame_error(path, "depth file contains negative values")
    depth = depth.reshape(intrinsics.height, intrinsics.width)
    detections = []
    for i, entry in enumerate(raw["detections"]):
        try:
            bbox = BBox2D(*[float(x) for x in entry["bbox"]])
            det = Detection2D(class_label=entry["class"], bbox=bbox,
                              confidence=float(entry["confidence"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise _frame_error(path, f"detection {i}: {exc}") from exc
        detections.append(det)
    return DetectionFrame(intrinsics=intrinsics, cam_pose=cam_pose,
                          depth=depth, detections=detections)


def write_detection_frame(path: str | Path, frame: DetectionFrame,
                          depth_file: str | None = None) -> None:
    """Write a frame as JSON plus a sibling raw float32 depth file."""
    path = Path(path)
    if depth_file is None:
        depth_file = path.stem + ".depth.bin"
    frame.depth.astype("<f4").tofile(path.parent / depth_file)
    doc = {
        "intrinsics": frame.intrinsics.to_dict(),
        "cam_pose": [float(x) for x in frame.cam_pose.matrix().reshape(-1)],
        "depth_file": depth_file,
        "detections": [d.to_dict() for d in frame.detections],
    }
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
