"""Seeded episodes over synthetic scenes with stage-wise accounting.

Two tasks share a four-stage pipeline: localization (embedding query),
detection (grasp proposals, or drawer boxes across views), navigation
(body placement), and manipulation (execution against ground truth).
Each episode reports pass/fail/not-reached per stage plus one terminal
outcome, so a batch summary conserves episodes across stages.

Randomness derives from one root seed through a documented split: batch
index i yields a scene seed (i, 0) and an episode seed (i, 1); inside a
search episode, view renders, detections, plane fits, and the refinement
look each take fixed sub-streams of the episode seed. Rerunning with the
same configuration and seed reproduces reports byte for byte (wall-clock
timings are kept in memory only, off the serialized record).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ..drawer import (DetectionFrame, DrawerConfig, fuse_views,
                      match_handles_to_drawers, plan_pull, refine_target,
                      view_target)
from ..errors import (ConfigError, DegenerateInputError, InvalidAxisError,
                      MissingDepthError, NoPlaneFoundError)
from ..geometry import CameraIntrinsics, Pose, farthest_point_sample, look_at
from ..grasp import (GraspCandidate, GraspConfig, filter_grasps,
                     merge_rotation_sweeps, sweep_pose, sweep_rotations,
                     top_k_by_score)
from ..nav import NavConfig, sample_positions, validate_candidates
from ..optimizer import OptimizerWeights, select_best
from ..scene import PointCloudScene
from .detector import detect_boxes
from .noise import NoiseModel
from .render import render_depth
from .scenegen import (PlacedObject, SceneSpec, SyntheticScene,
                       default_grasp_spec, default_search_spec, generate_scene)

STAGES = ("localization", "detection", "navigation", "manipulation")

GRASP_TASK = "grasp"
SEARCH_TASK = "search"


def derive_seed(root: int, *indices: int) -> int:
    """Child seed for a namespaced index path under one root seed.

    The path length is folded in up front because trailing zero indices
    would otherwise alias (entropy tuples are zero padded internally).
    """
    entropy = (len(indices), int(root)) + tuple(int(i) for i in indices)
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    """Camera, viewpoint, tolerance, and difficulty settings."""

    image_width: int = 160
    image_height: int = 120
    focal: float = 130.0
    n_views: int = 4
    view_candidates: int = 12
    view_span_deg: float = 120.0
    view_radius: float = 1.5
    grasp_success_tol: float = 0.02
    axis_tol_deg: float = 5.0
    handle_tol: float = 0.03
    close_looks: int = 3
    tier_noise_easy: float = 1.0
    tier_noise_medium: float = 2.0
    tier_noise_hard: float = 4.0

    def __post_init__(self):
        if self.image_width < 8 or self.image_height < 8:
            raise ConfigError("image size must be at least 8 x 8")
        for name in ("focal", "view_radius", "grasp_success_tol", "axis_tol_deg",
                     "handle_tol", "tier_noise_easy", "tier_noise_medium",
                     "tier_noise_hard"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.n_views < 1 or self.view_candidates < self.n_views:
            raise ConfigError("need view_candidates >= n_views >= 1")
        if self.close_looks < 1:
            raise ConfigError(f"close_looks must be >= 1, got {self.close_looks}")
        if not 0.0 < self.view_span_deg <= 360.0:
            raise ConfigError(
                f"view_span_deg must be in (0, 360], got {self.view_span_deg}")

    @property
    def intrinsics(self) -> CameraIntrinsics:
        return CameraIntrinsics(fx=self.focal, fy=self.focal,
                                cx=(self.image_width - 1) / 2.0,
                                cy=(self.image_height - 1) / 2.0,
                                width=self.image_width, height=self.image_height)

    def tier_sigma(self, tier: str, depth_sigma: float) -> float:
        factor = {"easy": self.tier_noise_easy, "medium": self.tier_noise_medium,
                  "hard": self.tier_noise_hard}[tier]
        return depth_sigma * factor

    def to_dict(self) -> dict:
        return {"image_width": self.image_width, "image_height": self.image_height,
                "focal": self.focal, "n_views": self.n_views,
                "view_candidates": self.view_candidates,
                "view_span_deg": self.view_span_deg,
                "view_radius": self.view_radius,
                "grasp_success_tol": self.grasp_success_tol,
                "axis_tol_deg": self.axis_tol_deg, "handle_tol": self.handle_tol,
                "close_looks": self.close_looks,
                "tier_noise_easy": self.tier_noise_easy,
                "tier_noise_medium": self.tier_noise_medium,
                "tier_noise_hard": self.tier_noise_hard}

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown sim config keys: {sorted(unknown)}")
        return cls(**d)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class StageOutcome:
    name: str
    status: str = "not-reached"        # pass | fail | not-reached
    reason: str | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "reason": self.reason}


@dataclass
class EpisodeReport:
    task: str
    index: int
    seed: int
    query: str
    tier: str | None
    stages: list[StageOutcome]
    success: bool
    details: dict
    timings_ms: dict = field(default_factory=dict)

    def failure_stage(self) -> str | None:
        for stage in self.stages:
            if stage.status == "fail":
                return stage.name
        return None

    def to_json_dict(self) -> dict:
        # timings are wall-clock and would break byte determinism
        return {"task": self.task, "index": self.index, "seed": self.seed,
                "query": self.query, "tier": self.tier,
                "stages": [s.to_dict() for s in self.stages],
                "success": self.success, "details": self.details}

    def to_json_line(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


class _StageClock:
    """Tracks per-stage outcomes and wall time for one episode."""

    def __init__(self):
        self.stages = [StageOutcome(name) for name in STAGES]
        self.timings_ms: dict[str, float] = {}
        self._t0 = time.perf_counter()
        self._idx = 0

    def _tick(self, name: str) -> None:
        now = time.perf_counter()
        self.timings_ms[name] = (now - self._t0) * 1000.0
        self._t0 = now

    def passed(self) -> None:
        stage = self.stages[self._idx]
        stage.status = "pass"
        self._tick(stage.name)
        self._idx += 1

    def failed(self, reason: str) -> None:
        stage = self.stages[self._idx]
        stage.status = "fail"
        stage.reason = reason
        self._tick(stage.name)


# ---------------------------------------------------------------------------
# Grasp episodes
# ---------------------------------------------------------------------------

def _approach_rotation(approach: np.ndarray) -> np.ndarray:
    """Orthonormal matrix whose first column is the horizontal approach."""
    x = np.asarray(approach, dtype=np.float64)
    x = x / np.linalg.norm(x)
    up = np.array([0.0, 0.0, 1.0])
    y = np.cross(up, x)
    y = y / np.linalg.norm(y)
    z = np.cross(x, y)
    return np.column_stack([x, y, z])


def _sweep_sector(approach: np.ndarray, count: int) -> int:
    theta = math.atan2(approach[1], approach[0]) % (2.0 * math.pi)
    width = 2.0 * math.pi / count
    return int(((theta + width / 2.0) % (2.0 * math.pi)) / width)


def _propose_grasps(target: PlacedObject, scene: PointCloudScene,
                    grasp_cfg: GraspConfig, sim: SimConfig, noise: NoiseModel,
                    rng: np.random.Generator) -> list[GraspCandidate]:
    """Simulated sweep detections: ground truth perturbed by tiered noise.

    Each truth grasp consumes a fixed draw layout (dropout, 3-D offset,
    confidence) so different noise magnitudes reuse the same underlying
    randomness. Proposals are authored in their sweep's rotated frame and
    merged back, mirroring how real sweep batches arrive.
    """
    centroid = scene.centroid_of(target.instance_id)
    rotations = sweep_rotations(grasp_cfg.sweep_count)
    sigma = sim.tier_sigma(target.tier, noise.depth_sigma)
    lo, hi = noise.confidence_range
    per_sweep: list[list[GraspCandidate]] = [[] for _ in rotations]
    for truth in target.truth_grasps:
        u_drop = rng.random()
        offset = rng.standard_normal(3)
        conf = float(rng.uniform(lo, hi))
        if u_drop < noise.detection_dropout:
            continue
        center = truth.center + sigma * offset
        world = Pose(_approach_rotation(truth.approach), center)
        sector = _sweep_sector(truth.approach, grasp_cfg.sweep_count)
        sweep = sweep_pose(rotations[sector], centroid)
        per_sweep[sector].append(GraspCandidate(
            pose=sweep.compose(world), width=truth.width, score=conf))
    batches = []
    for rotation, cands in zip(rotations, per_sweep):
        batches.append((sweep_pose(rotation, centroid),
                        top_k_by_score(cands, grasp_cfg.top_k)))
    return merge_rotation_sweeps(batches)


def run_grasp_episode(synth: SyntheticScene, target: PlacedObject,
                      seed: int, index: int = 0,
                      sim: SimConfig | None = None,
                      noise: NoiseModel | None = None,
                      nav: NavConfig | None = None,
                      grasp_cfg: GraspConfig | None = None,
                      weights: OptimizerWeights | None = None) -> EpisodeReport:
    """Locate the target by embedding, propose and filter grasps, place the
    body, and execute the jointly selected grasp against ground truth."""
    sim = sim or SimConfig()
    noise = noise or NoiseModel()
    nav = nav or NavConfig()
    grasp_cfg = grasp_cfg or GraspConfig()
    weights = weights or OptimizerWeights()
    scene = synth.scene
    clock = _StageClock()
    details: dict = {}
    rng = np.random.default_rng(seed)

    def report(success: bool) -> EpisodeReport:
        return EpisodeReport(task=GRASP_TASK, index=index, seed=seed,
                             query=target.label, tier=target.tier,
                             stages=clock.stages, success=success,
                             details=details, timings_ms=clock.timings_ms)

    # localization: embedding query must rank the target instance first
    code = synth.label_codes[target.label]
    results = scene.query_instance(code)
    top = results[0]
    details["similarity"] = float(top.similarity)
    if top.instance_id != target.instance_id:
        clock.failed("wrong-instance")
        return report(False)
    if top.similarity < grasp_cfg.min_similarity:
        clock.failed("low-similarity")
        return report(False)
    clock.passed()

    # detection: noisy sweep proposals filtered onto the object
    merged = _propose_grasps(target, scene, grasp_cfg, sim, noise, rng)
    details["proposals"] = len(merged)
    if not merged:
        clock.failed("no-proposals")
        return report(False)
    object_points = scene.instance_points(target.instance_id)
    kept = filter_grasps(merged, object_points, grasp_cfg.on_object_tol)
    details["on_object"] = len(kept)
    if not kept:
        clock.failed("no-grasp-on-object")
        return report(False)
    clock.passed()

    # navigation: ring placements validated against the scene
    centroid = scene.centroid_of(target.instance_id)
    candidates = sample_positions(centroid, nav)
    validated = validate_candidates(candidates, scene, target.instance_id, nav)
    valid = [c for c in validated if c.valid]
    details["body_candidates"] = len(validated)
    details["valid_bodies"] = len(valid)
    if not valid:
        clock.failed("no-valid-pose")
        return report(False)
    clock.passed()

    # manipulation: joint selection, then execution against ground truth
    selection = select_best(kept, valid, centroid, weights)
    chosen = kept[selection.grasp_index]
    truth_centers = np.stack([g.center for g in target.truth_grasps])
    errs = np.linalg.norm(truth_centers - chosen.center[None, :], axis=1)
    grasp_error = float(errs.min())
    details["selected_score"] = float(selection.s)
    details["grasp_error"] = grasp_error
    if grasp_error > sim.grasp_success_tol:
        clock.failed("grasp-off-target")
        return report(False)
    clock.passed()
    return report(True)


# ---------------------------------------------------------------------------
# Search episodes
# ---------------------------------------------------------------------------

def _view_poses(synth: SyntheticScene, sim: SimConfig,
                camera_height: float) -> list[Pose]:
    """Camera poses on an arc in front of the cabinet, spread out by
    farthest-point sampling over the arc candidates."""
    cabinet = synth.cabinet
    look_target = cabinet.handle_centers.mean(axis=0)
    center_angle = math.atan2(cabinet.axis[1], cabinet.axis[0])
    span = math.radians(sim.view_span_deg)
    angles = center_angle + np.linspace(-span / 2.0, span / 2.0,
                                        sim.view_candidates)
    eyes = np.stack([
        look_target[0] + sim.view_radius * np.cos(angles),
        look_target[1] + sim.view_radius * np.sin(angles),
        np.full(sim.view_candidates, camera_height),
    ], axis=1)
    middle = sim.view_candidates // 2
    chosen = farthest_point_sample(eyes, sim.n_views, start_index=middle)
    return [look_at(eyes[i], look_target) for i in chosen]


def run_search_episode(synth: SyntheticScene, seed: int, index: int = 0,
                       sim: SimConfig | None = None,
                       noise: NoiseModel | None = None,
                       nav: NavConfig | None = None,
                       drawer_cfg: DrawerConfig | None = None) -> EpisodeReport:
    """Find the cabinet, fuse multi-view drawer estimates, plan the pull,
    and check the refined estimate of the item's drawer against truth."""
    sim = sim or SimConfig()
    noise = noise or NoiseModel()
    nav = nav or NavConfig()
    drawer_cfg = drawer_cfg or DrawerConfig()
    if synth.cabinet is None:
        raise ValueError("search episodes need a scene with a cabinet")
    cabinet = synth.cabinet
    scene = synth.scene
    clock = _StageClock()
    details: dict = {}
    intr = sim.intrinsics

    def report(success: bool) -> EpisodeReport:
        return EpisodeReport(task=SEARCH_TASK, index=index, seed=seed,
                             query="cabinet", tier=None, stages=clock.stages,
                             success=success, details=details,
                             timings_ms=clock.timings_ms)

    # localization: the cabinet instance must rank first for its label code
    results = scene.query_instance(synth.label_codes["cabinet"])
    top = results[0]
    details["similarity"] = float(top.similarity)
    if top.instance_id != cabinet.instance_id:
        clock.failed("wrong-instance")
        return report(False)
    clock.passed()

    # detection: render and detect from arc views, lift, and fuse
    targets = []
    views_with_targets = 0
    for view_i, cam_pose in enumerate(_view_poses(synth, sim, nav.camera_height)):
        depth = render_depth(synth.primitives, intr, cam_pose, noise,
                             seed=derive_seed(seed, 10, view_i))
        dets = detect_boxes(cabinet, intr, cam_pose, noise,
                            seed=derive_seed(seed, 20, view_i))
        frame = DetectionFrame(intrinsics=intr, cam_pose=cam_pose, depth=depth,
                               detections=dets)
        pairs = match_handles_to_drawers(frame.handles, frame.drawers,
                                         kappa=drawer_cfg.kappa,
                                         ioa_min=drawer_cfg.ioa_min)
        added = 0
        for pair_i, pair in enumerate(pairs):
            try:
                vt = view_target(pair, frame, drawer_cfg.ransac,
                                 seed=derive_seed(seed, 30, view_i, pair_i))
            except (MissingDepthError, DegenerateInputError, NoPlaneFoundError):
                continue
            targets.append(vt)
            added += 1
        views_with_targets += 1 if added else 0
    details["view_targets"] = len(targets)
    details["views_with_targets"] = views_with_targets
    if not targets:
        clock.failed("no-detections")
        return report(False)
    fused = fuse_views(targets, drawer_cfg.cluster_radius)
    details["fused_targets"] = len(fused)
    true_center = cabinet.handle_centers[cabinet.item_drawer_index]
    dists = [float(np.linalg.norm(t.handle_center - true_center)) for t in fused]
    best = int(np.argmin(dists))
    details["association_error"] = dists[best]
    if dists[best] > drawer_cfg.gate_radius:
        clock.failed("target-drawer-not-found")
        return report(False)
    estimate = fused[best]
    clock.passed()

    # navigation: stand on the pull axis, inside bounds, clear of obstacles
    try:
        plan = plan_pull(estimate, drawer_cfg.standoff, drawer_cfg.pull_distance)
    except InvalidAxisError:
        clock.failed("axis-unpullable")
        return report(False)
    body_xy = plan.body_pose.translation[:2]
    lo, hi = scene.bounds
    details["body_position"] = [float(body_xy[0]), float(body_xy[1])]
    if (body_xy[0] < lo[0] + nav.footprint_radius
            or body_xy[0] > hi[0] - nav.footprint_radius
            or body_xy[1] < lo[1] + nav.footprint_radius
            or body_xy[1] > hi[1] - nav.footprint_radius):
        clock.failed("body-out-of-scene")
        return report(False)
    standing = np.array([body_xy[0], body_xy[1], nav.standing_height])
    clearance = scene.distance_to_obstacles(standing, None,
                                            min_z=float(lo[2]) + nav.floor_slab)
    details["body_clearance"] = float(clearance)
    if clearance < nav.footprint_radius:
        clock.failed("body-collides")
        return report(False)
    clock.passed()

    # manipulation: close-range looks refine the estimate, then tolerance
    # check vs truth; the body is stationary, so looks average out noise
    close_eye = np.array([body_xy[0], body_xy[1], nav.camera_height])
    close_pose = look_at(close_eye, estimate.handle_center)
    centers, axes, inliers = [], [], []
    for look_i in range(sim.close_looks):
        close_depth = render_depth(synth.primitives, intr, close_pose, noise,
                                   seed=derive_seed(seed, 40, look_i))
        close_dets = detect_boxes(cabinet, intr, close_pose, noise,
                                  seed=derive_seed(seed, 41, look_i))
        close_frame = DetectionFrame(intrinsics=intr, cam_pose=close_pose,
                                     depth=close_depth, detections=close_dets)
        look, ok = refine_target(estimate, close_frame,
                                 gate_radius=drawer_cfg.gate_radius,
                                 kappa=drawer_cfg.kappa,
                                 ioa_min=drawer_cfg.ioa_min,
                                 ransac=drawer_cfg.ransac,
                                 seed=derive_seed(seed, 42, look_i))
        if ok:
            centers.append(look.handle_center)
            axes.append(look.axis)
            inliers.append(look.plane_inliers)
    refined = bool(centers)
    if refined:
        axis = np.mean(axes, axis=0)
        axis = axis / np.linalg.norm(axis)
        final = replace(estimate, handle_center=np.mean(centers, axis=0),
                        axis=axis, plane_inliers=int(np.sum(inliers)))
    else:
        final = estimate
    details["refined"] = refined
    details["good_looks"] = len(centers)
    handle_error = float(np.linalg.norm(final.handle_center - true_center))
    dot = float(np.clip(final.axis @ cabinet.axis, -1.0, 1.0))
    axis_error = math.degrees(math.acos(dot))
    details["handle_error"] = handle_error
    details["axis_error_deg"] = axis_error
    if handle_error > sim.handle_tol or axis_error > sim.axis_tol_deg:
        clock.failed("tolerance-exceeded")
        return report(False)
    clock.passed()
    return report(True)


# ---------------------------------------------------------------------------
# Batches
# ---------------------------------------------------------------------------

def summarize(reports: list[EpisodeReport], config: dict | None = None) -> dict:
    """Batch roll-up: success rate with a 95% interval, stage failure
    counts that conserve episodes, and per-tier rates where tiers apply."""
    n = len(reports)
    successes = sum(1 for r in reports if r.success)
    rate = successes / n if n else 0.0
    half = 1.96 * math.sqrt(rate * (1.0 - rate) / n) if n else 0.0
    failures = {stage: 0 for stage in STAGES}
    for r in reports:
        stage = r.failure_stage()
        if stage is not None:
            failures[stage] += 1
    summary = {
        "episodes": n,
        "successes": successes,
        "success_rate": rate,
        "ci95": [max(0.0, rate - half), min(1.0, rate + half)],
        "stage_failures": failures,
        "conserved": successes + sum(failures.values()) == n,
    }
    tiers = sorted({r.tier for r in reports if r.tier is not None})
    if tiers:
        per_tier = {}
        for tier in tiers:
            sub = [r for r in reports if r.tier == tier]
            wins = sum(1 for r in sub if r.success)
            per_tier[tier] = {"episodes": len(sub), "successes": wins,
                              "success_rate": wins / len(sub)}
        summary["per_tier"] = per_tier
    if config is not None:
        summary["config"] = config
    return summary


def run_grasp_batch(n_episodes: int, base_seed: int,
                    spec: SceneSpec | None = None,
                    sim: SimConfig | None = None,
                    noise: NoiseModel | None = None,
                    nav: NavConfig | None = None,
                    grasp_cfg: GraspConfig | None = None,
                    weights: OptimizerWeights | None = None,
                    ) -> tuple[list[EpisodeReport], dict]:
    """Seeded grasp episodes cycling through the spec's objects."""
    spec = spec or default_grasp_spec()
    if not spec.objects:
        raise ValueError("grasp batches need at least one object in the spec")
    reports = []
    for i in range(n_episodes):
        synth = generate_scene(spec, seed=derive_seed(base_seed, i, 0))
        target = synth.objects[i % len(synth.objects)]
        reports.append(run_grasp_episode(
            synth, target, seed=derive_seed(base_seed, i, 1), index=i,
            sim=sim, noise=noise, nav=nav, grasp_cfg=grasp_cfg, weights=weights))
    return reports, summarize(reports)


def run_search_batch(n_episodes: int, base_seed: int,
                     spec: SceneSpec | None = None,
                     sim: SimConfig | None = None,
                     noise: NoiseModel | None = None,
                     nav: NavConfig | None = None,
                     drawer_cfg: DrawerConfig | None = None,
                     ) -> tuple[list[EpisodeReport], dict]:
    """Seeded drawer-search episodes over regenerated scenes."""
    spec = spec or default_search_spec()
    if spec.cabinet is None:
        raise ValueError("search batches need a cabinet in the spec")
    reports = []
    for i in range(n_episodes):
        synth = generate_scene(spec, seed=derive_seed(base_seed, i, 0))
        reports.append(run_search_episode(
            synth, seed=derive_seed(base_seed, i, 1), index=i,
            sim=sim, noise=noise, nav=nav, drawer_cfg=drawer_cfg))
    return reports, summarize(reports)
