"""Grasp candidate ingestion, rotation-sweep merging, and filtering.

Grasp candidates arrive from an external detector that is run several
times against rotated copies of the isolated object (rotations about the
object centroid). Each batch must be de-rotated back into the world frame
before candidates can be compared. The grasp center is the pose
translation: the midpoint between the fingertip contact points. The
approach axis is the first column of the pose rotation.

Batch file: JSON {"rotation": [9 floats row-major], "candidates":
[{"translation": [3], "rotation": [9 row-major], "width": w, "score": s}]}.
The batch-level rotation is the pure rotation that was applied to the
object; callers supply the centroid it pivoted about (see sweep_pose).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import (ConfigError, DegenerateInputError, FileFormatError,
                     InvalidRotationError)
from .geometry import ROTATION_TOL, Pose

DEFAULT_ON_OBJECT_TOL = 0.02
DEFAULT_SWEEP_COUNT = 4
DEFAULT_TOP_K = 10


@dataclass
class GraspCandidate:
    """Two-finger grasp: pose + opening width + detector confidence."""

    pose: Pose
    width: float
    score: float
    source_rotation: int = -1

    def __post_init__(self):
        if self.width < 0:
            raise ValueError(f"grasp width must be nonnegative, got {self.width}")

    @property
    def center(self) -> np.ndarray:
        return self.pose.translation

    @property
    def approach_axis(self) -> np.ndarray:
        return self.pose.rotation[:, 0]


@dataclass
class GraspConfig:
    """Knobs for the grasp ingestion stage of the pipeline."""

    on_object_tol: float = DEFAULT_ON_OBJECT_TOL
    top_k: int = DEFAULT_TOP_K          # per sweep batch, by score
    sweep_count: int = DEFAULT_SWEEP_COUNT
    isolate_padding: float = 0.5
    min_similarity: float = 0.5         # localization acceptance threshold

    def __post_init__(self):
        if self.on_object_tol <= 0:
            raise ConfigError(f"on_object_tol must be positive, got {self.on_object_tol}")
        if self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")
        if self.sweep_count < 1:
            raise ConfigError(f"sweep_count must be >= 1, got {self.sweep_count}")
        if self.isolate_padding < 0:
            raise ConfigError(
                f"isolate_padding must be >= 0, got {self.isolate_padding}")
        if not 0.0 <= self.min_similarity <= 1.0:
            raise ConfigError(
                f"min_similarity must be in [0, 1], got {self.min_similarity}")

    def to_dict(self) -> dict:
        return {"on_object_tol": self.on_object_tol, "top_k": self.top_k,
                "sweep_count": self.sweep_count,
                "isolate_padding": self.isolate_padding,
                "min_similarity": self.min_similarity}

    @classmethod
    def from_dict(cls, d: dict) -> "GraspConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown grasp config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class GraspBatch:
    """One sweep's worth of candidates, still in the rotated frame."""

    rotation: np.ndarray               # the 3x3 applied to the object
    candidates: list[GraspCandidate] = field(default_factory=list)


def sweep_pose(rotation: np.ndarray, centroid: np.ndarray) -> Pose:
    """Pose for a rotation about `centroid`: p -> R (p - c) + c."""
    rot = np.asarray(rotation, dtype=np.float64)
    c = np.asarray(centroid, dtype=np.float64)
    return Pose(rot, c - rot @ c)


def sweep_rotations(count: int) -> list[np.ndarray]:
    """Evenly spaced yaw rotations (about +z), starting at identity."""
    out = []
    for i in range(count):
        angle = 2.0 * math.pi * i / count
        ca, sa = math.cos(angle), math.sin(angle)
        out.append(np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]]))
    return out


def load_grasp_batch(path: str) -> GraspBatch:
    """Parse one grasp batch file; candidates stay in the rotated frame."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"{path}: cannot parse grasp batch: {exc}") from exc
    try:
        rotation = np.asarray(doc["rotation"], dtype=np.float64).reshape(3, 3)
        raw = doc["candidates"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: malformed grasp batch: {exc}") from exc
    candidates = []
    for i, rec in enumerate(raw):
        try:
            pose = Pose(np.asarray(rec["rotation"], dtype=np.float64).reshape(3, 3),
                        np.asarray(rec["translation"], dtype=np.float64))
            candidates.append(GraspCandidate(pose=pose, width=float(rec["width"]),
                                             score=float(rec["score"])))
        except (KeyError, TypeError, ValueError, InvalidRotationError) as exc:
            raise FileFormatError(f"{path}: candidate {i}: {exc}") from exc
    return GraspBatch(rotation=rotation, candidates=candidates)


def merge_rotation_sweeps(
        batches: Sequence[tuple[Pose, Sequence[GraspCandidate]]]) -> list[GraspCandidate]:
    """De-rotate per-sweep candidates into the shared world frame.

    Each batch pairs the rotation pose that was applied to the object
    (a pure rotation about its centroid) with candidates detected in that
    rotated frame. Candidates come back transformed by the inverse pose,
    tagged with their batch index; scores and widths pass through
    untouched and the total count is preserved.
    """
    merged: list[GraspCandidate] = []
    for batch_idx, (rotation_pose, candidates) in enumerate(batches):
        rot = rotation_pose.rotation
        err = np.max(np.abs(rot @ rot.T - np.eye(3)))
        if err > ROTATION_TOL or abs(float(np.linalg.det(rot)) - 1.0) > ROTATION_TOL:
            raise InvalidRotationError(
                f"batch {batch_idx} rotation is not orthonormal (error {err:.3g})")
        inverse = rotation_pose.inverse()
        for cand in candidates:
            merged.append(replace(cand, pose=inverse.compose(cand.pose),
                                  source_rotation=batch_idx))
    return merged


def filter_grasps(candidates: Sequence[GraspCandidate], object_points: np.ndarray,
                  on_object_tol: float = DEFAULT_ON_OBJECT_TOL) -> list[GraspCandidate]:
    """Keep candidates with positive score whose center lies on the object.

    "On the object" means the grasp center is within `on_object_tol` of
    the nearest object point. Input order is preserved.
    """
    object_points = np.asarray(object_points, dtype=np.float64)
    if object_points.ndim != 2 or object_points.shape[1] != 3 or len(object_points) == 0:
        raise DegenerateInputError(
            f"object_points must be a non-empty (N, 3) array, got shape "
            f"{object_points.shape}")
    if not candidates:
        return []
    tree = cKDTree(object_points)
    centers = np.stack([c.center for c in candidates])
    dists, _ = tree.query(centers)
    return [cand for cand, dist in zip(candidates, dists)
            if cand.score > 0.0 and dist <= on_object_tol]


def top_k_by_score(candidates: Sequence[GraspCandidate], k: int) -> list[GraspCandidate]:
    """Highest-scoring k candidates, input order among equals preserved."""
    order = sorted(range(len(candidates)),
                   key=lambda i: (-candidates[i].score, i))[:k]
    return [candidates[i] for i in sorted(order)]
