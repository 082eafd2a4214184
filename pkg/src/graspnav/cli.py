"""Command-line frontend: file-in, JSON-report-out, stable exit codes.

Subcommands cover the pipeline end to end: `query` ranks instances
against an embedding, `plan-grasp` runs localization through joint
grasp/body selection, `match-drawers` fuses drawer targets from detection
frames, and `simulate` runs seeded episode batches.

Every report embeds the fully resolved configuration (defaults plus any
config-file overrides), is serialized with sorted keys, and contains no
timestamps, so identical inputs and seed reproduce identical bytes.

Randomness policy: one ``--seed`` flag per invocation. Subsystems never
share a stream; each draws from ``derive_seed(seed, *path)`` where the
path indexes the consumer (frame index, pair index, episode index), so
adding a consumer never shifts the draws of another.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_run_config
from .drawer import (fuse_views, load_detection_frame,
                     match_handles_to_drawers, view_target)
from .errors import (DegenerateInputError, GraspNavError, LocalizationError,
                     MissingDepthError, NoGraspError, NoPlaneFoundError,
                     NoPoseError, UnsupportedQueryError)
from .grasp import filter_grasps, load_grasp_batch, merge_rotation_sweeps, \
    sweep_pose, top_k_by_score
from .nav import sample_positions, validate_candidates
from .optimizer import select_best
from .scene import load_scene
from .sim import derive_seed, run_grasp_batch, run_search_batch
from .sim.scenegen import (default_grasp_spec, default_search_spec,
                           load_scene_spec)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_NO_EMBEDDINGS = 2
EXIT_LOCALIZATION = 3
EXIT_GRASP_FILTER = 4
EXIT_NAVIGATION = 5

_EXIT_CODES_HELP = """\
exit codes:
  0  success
  1  parse or validation failure (arguments, files, config)
  2  query unsupported: no instance in the scene carries an embedding
  3  localization failed: query matched no usable instance
  4  grasp filtering left no usable candidate
  5  navigation found no valid body placement
"""


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; our contract reserves 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)


def _load_query_embedding(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if isinstance(raw, dict):
        raw = raw.get("embedding")
    if not isinstance(raw, list) or not raw:
        raise ValueError(
            f"{path}: expected a JSON list of floats or an object with an"
            f" 'embedding' list")
    return np.asarray(raw, dtype=np.float64)


def _resolve_config(path: str | None) -> RunConfig:
    return load_run_config(path) if path else RunConfig()


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _pose_dict(pose) -> dict:
    return {"translation": [float(x) for x in pose.translation],
            "rotation": [float(x) for x in pose.rotation.reshape(-1)]}


def _body_dict(index: int, body) -> dict:
    return {"index": index,
            "position": [float(body.position[0]), float(body.position[1])],
            "yaw": float(body.yaw), "valid": body.valid, "reason": body.reason,
            "s_body": None if body.s_body is None else float(body.s_body),
            "d_obstacles": (None if body.d_obstacles is None
                            else float(body.d_obstacles)),
            "d_item": None if body.d_item is None else float(body.d_item)}


def _grasp_dict(index: int, grasp) -> dict:
    return {"index": index, "pose": _pose_dict(grasp.pose),
            "width": float(grasp.width), "score": float(grasp.score),
            "source_rotation": grasp.source_rotation}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_query(args) -> int:
    config = _resolve_config(args.config)
    scene = load_scene(args.scene, args.instances)
    query = _load_query_embedding(args.query)
    results = scene.query_instance(query)
    report = {
        "command": "query",
        "config": config.to_dict(),
        "results": [{"instance_id": r.instance_id,
                     "label": scene.instance(r.instance_id).label,
                     "similarity": float(r.similarity),
                     "centroid": [float(x) for x in r.centroid]}
                    for r in results],
    }
    _emit(report, args.out)
    return EXIT_OK


def cmd_plan_grasp(args) -> int:
    config = _resolve_config(args.config)
    scene = load_scene(args.scene, args.instances)
    query = _load_query_embedding(args.query)

    results = scene.query_instance(query)
    top = results[0]
    if top.similarity < config.grasp.min_similarity:
        raise LocalizationError(
            f"best similarity {top.similarity:.3f} is below the"
            f" min_similarity threshold {config.grasp.min_similarity}")
    centroid = scene.centroid_of(top.instance_id)

    batches = []
    for path in args.grasps:
        batch = load_grasp_batch(path)
        kept = top_k_by_score(batch.candidates, config.grasp.top_k)
        batches.append((sweep_pose(batch.rotation, centroid), kept))
    merged = merge_rotation_sweeps(batches)
    if not merged:
        raise NoGraspError("grasp batches contain no candidates")
    object_points = scene.instance_points(top.instance_id)
    filtered = filter_grasps(merged, object_points, config.grasp.on_object_tol)
    if not filtered:
        raise NoGraspError(
            f"no candidate with positive score lies within"
            f" {config.grasp.on_object_tol} m of the object")

    candidates = sample_positions(centroid, config.nav)
    bodies = validate_candidates(candidates, scene, top.instance_id, config.nav)
    valid = [b for b in bodies if b.valid]
    if not valid:
        raise NoPoseError("no sampled body placement is valid")

    selection = select_best(filtered, valid, centroid, config.optimizer)
    chosen_body = valid[selection.body_index]
    report = {
        "command": "plan-grasp",
        "config": config.to_dict(),
        "localization": {"instance_id": top.instance_id,
                         "label": scene.instance(top.instance_id).label,
                         "similarity": float(top.similarity),
                         "centroid": [float(x) for x in centroid]},
        "grasps": [_grasp_dict(i, g) for i, g in enumerate(filtered)],
        "bodies": [_body_dict(i, b) for i, b in enumerate(bodies)],
        "selection": {**selection.to_dict(),
                      "grasp": _grasp_dict(selection.grasp_index,
                                           filtered[selection.grasp_index]),
                      "body": _body_dict(selection.body_index, chosen_body)},
    }
    _emit(report, args.out)
    return EXIT_OK


def cmd_match_drawers(args) -> int:
    config = _resolve_config(args.config)
    targets = []
    frame_stats = []
    for frame_i, path in enumerate(args.frames):
        frame = load_detection_frame(path)
        pairs = match_handles_to_drawers(frame.handles, frame.drawers,
                                         kappa=config.drawer.kappa,
                                         ioa_min=config.drawer.ioa_min)
        lifted = 0
        for pair_i, pair in enumerate(pairs):
            try:
                vt = view_target(pair, frame, config.drawer.ransac,
                                 seed=derive_seed(args.seed, frame_i, pair_i))
            except (MissingDepthError, DegenerateInputError,
                    NoPlaneFoundError):
                continue
            targets.append(vt)
            lifted += 1
        frame_stats.append({"frame": str(path),
                            "handles": len(frame.handles),
                            "drawers": len(frame.drawers),
                            "matched": len(pairs), "lifted": lifted})
    fused = fuse_views(targets, config.drawer.cluster_radius)
    report = {
        "command": "match-drawers",
        "config": config.to_dict(),
        "seed": args.seed,
        "frames": frame_stats,
        "targets": [t.to_dict() for t in fused],
    }
    _emit(report, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _resolve_config(args.config)
    if args.spec:
        spec = load_scene_spec(args.spec)
    else:
        spec = (default_grasp_spec() if args.task == "grasp"
                else default_search_spec())
    if args.task == "grasp":
        reports, summary = run_grasp_batch(
            args.episodes, args.seed, spec=spec, sim=config.sim,
            noise=config.noise, nav=config.nav, grasp_cfg=config.grasp,
            weights=config.optimizer)
    else:
        reports, summary = run_search_batch(
            args.episodes, args.seed, spec=spec, sim=config.sim,
            noise=config.noise, nav=config.nav, drawer_cfg=config.drawer)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    episodes_path = out_dir / "episodes.ndjson"
    with open(episodes_path, "w", encoding="utf-8") as fh:
        for rep in reports:
            fh.write(rep.to_json_line() + "\n")
    summary_doc = {"command": "simulate", "task": args.task,
                   "seed": args.seed, "spec": spec.to_dict(),
                   "config": config.to_dict(), **summary}
    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(summary_doc, sort_keys=True, indent=2)
                            + "\n", encoding="utf-8")
    print(f"{args.task} batch: {summary['successes']}/{summary['episodes']}"
          f" succeeded (rate {summary['success_rate']:.3f})")
    print(f"wrote {episodes_path} and {summary_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="graspnav",
        description="Object localization, grasp/body planning, drawer"
                    " matching, and seeded simulation.",
        epilog=_EXIT_CODES_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="subcommand", required=True,
                                parser_class=_Parser)

    q = sub.add_parser("query", help="rank instances against an embedding",
                       epilog=_EXIT_CODES_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    q.add_argument("--scene", required=True, help="PLY point cloud")
    q.add_argument("--instances", required=True, help="instances JSON")
    q.add_argument("--query", required=True,
                   help="JSON file holding the unit query embedding")
    q.add_argument("--config", help="run config JSON")
    q.add_argument("--out", help="report path (stdout when omitted)")
    q.set_defaults(func=cmd_query)

    p = sub.add_parser("plan-grasp",
                       help="localize, merge grasp sweeps, pick grasp + body",
                       epilog=_EXIT_CODES_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--scene", required=True, help="PLY point cloud")
    p.add_argument("--instances", required=True, help="instances JSON")
    p.add_argument("--query", required=True,
                   help="JSON file holding the unit query embedding")
    p.add_argument("--grasps", required=True, nargs="+",
                   help="grasp batch JSON files, one per rotation sweep")
    p.add_argument("--config", help="run config JSON")
    p.add_argument("--out", help="report path (stdout when omitted)")
    p.set_defaults(func=cmd_plan_grasp)

    m = sub.add_parser("match-drawers",
                       help="fuse drawer targets from detection frames",
                       epilog=_EXIT_CODES_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    m.add_argument("--frames", required=True, nargs="+",
                   help="detection frame JSON files")
    m.add_argument("--config", help="run config JSON")
    m.add_argument("--seed", type=int, default=0,
                   help="root seed; per-frame plane fits use"
                        " derive_seed(seed, frame_index, pair_index)")
    m.add_argument("--out", help="report path (stdout when omitted)")
    m.set_defaults(func=cmd_match_drawers)

    s = sub.add_parser("simulate", help="run a seeded episode batch",
                       epilog=_EXIT_CODES_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("--task", required=True, choices=("grasp", "search"),
                   help="which episode type to run")
    s.add_argument("--episodes", type=int, default=200,
                   help="number of episodes (default 200)")
    s.add_argument("--spec", help="scene spec JSON (built-in default per task)")
    s.add_argument("--config", help="run config JSON")
    s.add_argument("--seed", type=int, default=0,
                   help="root seed; episode i uses derive_seed(seed, i, 0)"
                        " for the scene and derive_seed(seed, i, 1) inside")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnsupportedQueryError as exc:
        print(f"graspnav: {exc}", file=sys.stderr)
        return EXIT_NO_EMBEDDINGS
    except LocalizationError as exc:
        print(f"graspnav: {exc}", file=sys.stderr)
        return EXIT_LOCALIZATION
    except NoGraspError as exc:
        print(f"graspnav: {exc}", file=sys.stderr)
        return EXIT_GRASP_FILTER
    except NoPoseError as exc:
        print(f"graspnav: {exc}", file=sys.stderr)
        return EXIT_NAVIGATION
    except (GraspNavError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"graspnav: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
