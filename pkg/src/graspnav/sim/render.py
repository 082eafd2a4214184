"""Depth rendering by ray casting against solid primitives."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..geometry import CameraIntrinsics, Pose
from .noise import NoiseModel


def render_depth(primitives: Sequence, intrinsics: CameraIntrinsics,
                 cam_pose: Pose, noise: NoiseModel | None = None,
                 seed: int = 0) -> np.ndarray:
    """Depth image (height, width) of the nearest primitive per pixel.

    Rays pass through integer pixel centers with unit forward component,
    so the stored value is depth along the camera axis; 0 marks a miss.
    With a noise model, valid depths get Gaussian noise (values pushed
    nonpositive become invalid) and a fraction is dropped to 0.
    """
    w, h = intrinsics.width, intrinsics.height
    us, vs = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    dirs_cam = np.stack([
        (us.ravel() - intrinsics.cx) / intrinsics.fx,
        (vs.ravel() - intrinsics.cy) / intrinsics.fy,
        np.ones(w * h),
    ], axis=1)
    dirs_world = dirs_cam @ cam_pose.rotation.T
    origin = cam_pose.translation

    t_best = np.full(w * h, np.inf)
    for prim in primitives:
        t_best = np.minimum(t_best, prim.intersect(origin, dirs_world))
    depth = np.where(np.isfinite(t_best), t_best, 0.0).reshape(h, w)

    if noise is not None and (noise.depth_sigma > 0 or noise.depth_dropout > 0):
        rng = np.random.default_rng(seed)
        if noise.depth_sigma > 0:
            bumps = rng.normal(0.0, noise.depth_sigma, size=depth.shape)
            depth = np.where(depth > 0, depth + bumps, depth)
        if noise.depth_dropout > 0:
            drop = rng.random(depth.shape) < noise.depth_dropout
            depth = np.where(drop, 0.0, depth)
        depth = np.where(depth < 0, 0.0, depth)
    return depth
