"""Shared test helpers: seeded random geometry builders."""

from __future__ import annotations

import numpy as np

from graspnav.geometry import CameraIntrinsics, Pose


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation matrix from a normalized quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def random_pose(rng: np.random.Generator, span: float = 2.0) -> Pose:
    return Pose(random_rotation(rng), rng.uniform(-span, span, size=3))


def vga_intrinsics(**overrides) -> CameraIntrinsics:
    params = dict(fx=525.0, fy=525.0, cx=319.5, cy=239.5, width=640, height=480)
    params.update(overrides)
    return CameraIntrinsics(**params)
