"""Point-cloud scenes: file ingestion, instance queries, obstacle distances.

A scene couples a point cloud with labeled instance masks. Masks may carry
a unit embedding; localization queries rank instances by cosine similarity
against a query embedding in the same space. Scenes are immutable after
load; every accessor is read-only, so one scene can serve many threads.

File formats:
    * Cloud: ASCII PLY, vertex properties x y z (float, meters) plus
      optional red green blue (uchar).
    * Instances: JSON {"embedding_dim": D, "instances": [{"id", "label",
      "confidence", "point_indices": [...], "embedding": [D floats]|null}]}.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptySceneError,
    FileFormatError,
    InstanceNotFoundError,
    UnsupportedQueryError,
)
from .geometry import PointIndex

DEFAULT_EMBEDDING_DIM = 768
EMBEDDING_NORM_TOL = 1e-6

_FLOAT_TYPES = {"float", "float32", "float64", "double"}
_UCHAR_TYPES = {"uchar", "uint8"}


# ---------------------------------------------------------------------------
# PLY I/O
# ---------------------------------------------------------------------------

def read_ply(path: str) -> tuple[np.ndarray, np.ndarray | None]:
    """Read an ASCII PLY cloud; returns (points, colors-or-None)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise FileFormatError(f"{path}: missing 'ply' magic line")

    n_vertices = None
    properties: list[tuple[str, str]] = []
    data_start = None
    in_vertex_element = False
    for i, raw in enumerate(lines[1:], start=1):
        line = raw.strip()
        if not line or line.startswith("comment"):
            continue
        if line.startswith("format"):
            if line.split()[1] != "ascii":
                raise FileFormatError(f"{path}: only ascii PLY is supported, got '{line}'")
        elif line.startswith("element"):
            parts = line.split()
            in_vertex_element = parts[1] == "vertex"
            if in_vertex_element:
                n_vertices = int(parts[2])
            elif int(parts[2]) != 0:
                raise FileFormatError(f"{path}: unsupported non-empty element '{parts[1]}'")
        elif line.startswith("property"):
            if in_vertex_element:
                parts = line.split()
                if len(parts) != 3:
                    raise FileFormatError(f"{path}: unsupported property line '{line}'")
                properties.append((parts[1], parts[2]))
        elif line == "end_header":
            data_start = i + 1
            break
        else:
            raise FileFormatError(f"{path}: unrecognized header line '{line}'")
    if data_start is None or n_vertices is None:
        raise FileFormatError(f"{path}: truncated PLY header")

    names = [name for _, name in properties]
    for coord in ("x", "y", "z"):
        if coord not in names:
            raise FileFormatError(f"{path}: vertex element lacks property '{coord}'")
    for ptype, name in properties:
        if name in ("x", "y", "z") and ptype not in _FLOAT_TYPES:
            raise FileFormatError(f"{path}: property '{name}' must be float, got '{ptype}'")
        if name in ("red", "green", "blue") and ptype not in _UCHAR_TYPES:
            raise FileFormatError(f"{path}: property '{name}' must be uchar, got '{ptype}'")

    rows = lines[data_start:data_start + n_vertices]
    if len(rows) < n_vertices:
        raise FileFormatError(
            f"{path}: header declares {n_vertices} vertices but only "
            f"{len(rows)} data rows are present")
    if n_vertices == 0:
        data = np.empty((0, len(names)))
    else:
        try:
            data = np.array([[float(tok) for tok in row.split()] for row in rows])
        except ValueError as exc:
            raise FileFormatError(f"{path}: non-numeric vertex row: {exc}") from exc
        if data.shape[1] != len(names):
            raise FileFormatError(
                f"{path}: vertex rows have {data.shape[1]} columns, "
                f"header declares {len(names)}")

    cols = {name: i for i, name in enumerate(names)}
    points = data[:, [cols["x"], cols["y"], cols["z"]]].astype(np.float64)
    colors = None
    if all(c in cols for c in ("red", "green", "blue")):
        colors = data[:, [cols["red"], cols["green"], cols["blue"]]].astype(np.uint8)
    return points, colors


def write_ply(path: str, points: np.ndarray, colors: np.ndarray | None = None) -> None:
    """Write an ASCII PLY cloud with full float64 precision (repr round trip)."""
    points = np.asarray(points, dtype=np.float64)
    header = ["ply", "format ascii 1.0", f"element vertex {len(points)}",
              "property double x", "property double y", "property double z"]
    if colors is not None:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(header) + "\nend_header\n")
        if colors is None:
            for p in points:
                fh.write(f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n")
        else:
            for p, c in zip(points, colors):
                fh.write(f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r} "
                         f"{int(c[0])} {int(c[1])} {int(c[2])}\n")


# ---------------------------------------------------------------------------
# Scene types
# ---------------------------------------------------------------------------

@dataclass
class InstanceMask:
    """One labeled object: point indices into the scene cloud, optional embedding."""

    id: int
    label: str
    point_indices: np.ndarray
    embedding: np.ndarray | None
    confidence: float


@dataclass(frozen=True)
class QueryResult:
    instance_id: int
    similarity: float
    centroid: np.ndarray


class PointCloudScene:
    """Immutable environment model: points, optional colors, instance masks."""

    def __init__(self, points: np.ndarray, colors: np.ndarray | None,
                 instances: list[InstanceMask], embedding_dim: int):
        self.points = np.asarray(points, dtype=np.float64)
        self.colors = colors
        self.instances = list(instances)
        self.embedding_dim = embedding_dim
        if len(self.points) == 0:
            raise FileFormatError("scene contains no points")
        self.bounds = np.stack([self.points.min(axis=0), self.points.max(axis=0)])
        self._by_id = {inst.id: inst for inst in self.instances}
        self._index_cache: dict[tuple[int | None, float | None], PointIndex] = {}
        self._cache_lock = threading.Lock()

    # -- lookups ------------------------------------------------------------

    def instance(self, instance_id: int) -> InstanceMask:
        try:
            return self._by_id[instance_id]
        except KeyError:
            raise InstanceNotFoundError(f"no instance with id {instance_id}") from None

    def instance_points(self, instance_id: int) -> np.ndarray:
        return self.points[self.instance(instance_id).point_indices]

    def centroid_of(self, instance_id: int) -> np.ndarray:
        return self.instance_points(instance_id).mean(axis=0)

    def obstacle_index(self, exclude_instance: int | None = None,
                       min_z: float | None = None) -> PointIndex:
        """Index over scene points outside the excluded instance / floor slab.

        Built lazily and cached per (exclude_instance, min_z); scenes are
        immutable so cached indexes stay valid.
        """
        if exclude_instance is not None:
            self.instance(exclude_instance)  # raise before caching odd keys
        key = (exclude_instance, min_z)
        with self._cache_lock:
            cached = self._index_cache.get(key)
            if cached is not None:
                return cached
            mask = np.ones(len(self.points), dtype=bool)
            if exclude_instance is not None:
                mask[self.instance(exclude_instance).point_indices] = False
            if min_z is not None:
                mask &= self.points[:, 2] >= min_z
            index = PointIndex(self.points[mask])
            self._index_cache[key] = index
            return index

    # -- queries ------------------------------------------------------------

    def query_instance(self, query_embedding: np.ndarray) -> list[QueryResult]:
        """Rank embedded instances by cosine similarity, best first.

        Ties are broken by ascending instance id so rankings are total.
        Raises UnsupportedQueryError when no instance has an embedding.
        """
        embedded = [inst for inst in self.instances if inst.embedding is not None]
        if not embedded:
            raise UnsupportedQueryError("no instance in this scene carries an embedding")
        q = np.asarray(query_embedding, dtype=np.float64).reshape(-1)
        if q.shape[0] != self.embedding_dim:
            raise ValueError(
                f"query embedding has dimension {q.shape[0]}, scene declares "
                f"{self.embedding_dim}")
        norm = float(np.linalg.norm(q))
        if abs(norm - 1.0) > EMBEDDING_NORM_TOL:
            raise ValueError(f"query embedding must be unit length, got norm {norm}")
        scored = [(float(inst.embedding @ q), inst) for inst in embedded]
        scored.sort(key=lambda pair: (-pair[0], pair[1].id))
        return [QueryResult(inst.id, sim, self.points[inst.point_indices].mean(axis=0))
                for sim, inst in scored]

    def isolate_object(self, instance_id: int,
                       padding: float) -> tuple[np.ndarray, np.ndarray]:
        """Split into (object points, nearby environment points).

        Environment points are all non-instance points whose Euclidean
        distance to the instance's axis-aligned bounding box is at most
        `padding` (so padding=0 keeps only points inside the box and
        padding=inf keeps everything).
        """
        inst = self.instance(instance_id)
        object_points = self.points[inst.point_indices]
        mask = np.ones(len(self.points), dtype=bool)
        mask[inst.point_indices] = False
        others = self.points[mask]
        lo = object_points.min(axis=0)
        hi = object_points.max(axis=0)
        gap = np.maximum(np.maximum(lo - others, others - hi), 0.0)
        near = np.einsum("ij,ij->i", gap, gap) <= padding * padding
        return object_points, others[near]

    def distance_to_obstacles(self, p: np.ndarray,
                              exclude_instance: int | None = None,
                              min_z: float | None = None) -> float:
        """Distance from p to the nearest point outside the excluded instance."""
        index = self.obstacle_index(exclude_instance, min_z)
        if len(index) == 0:
            raise EmptySceneError("no obstacle points remain after exclusion")
        dist, _ = index.nearest(np.asarray(p, dtype=np.float64))
        return dist


# ---------------------------------------------------------------------------
# Instances file I/O and scene loading
# ---------------------------------------------------------------------------

def _parse_instance(record: dict, n_points: int, dim: int,
                    claimed: np.ndarray, path: str) -> InstanceMask:
    try:
        inst_id = int(record["id"])
        label = str(record["label"])
        confidence = float(record["confidence"])
        raw_indices = record["point_indices"]
        raw_embedding = record.get("embedding")
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: malformed instance record: {exc}") from exc
    if not 0.0 <= confidence <= 1.0:
        raise FileFormatError(
            f"{path}: instance {inst_id} confidence {confidence} outside [0, 1]")
    indices = np.asarray(raw_indices, dtype=np.int64)
    if indices.size == 0:
        raise FileFormatError(f"{path}: instance {inst_id} has no points")
    if indices.min() < 0 or indices.max() >= n_points:
        raise FileFormatError(
            f"{path}: instance {inst_id} references point index "
            f"{int(indices.max())} outside [0, {n_points})")
    overlap = claimed[indices]
    if overlap.any():
        clash = int(indices[np.argmax(overlap)])
        raise FileFormatError(
            f"{path}: instance {inst_id} overlaps a previous instance at "
            f"point index {clash}")
    claimed[indices] = True
    embedding = None
    if raw_embedding is not None:
        embedding = np.asarray(raw_embedding, dtype=np.float64)
        if embedding.shape != (dim,):
            raise FileFormatError(
                f"{path}: instance {inst_id} embedding has {embedding.size} "
                f"values, header declares {dim}")
        norm = float(np.linalg.norm(embedding))
        if abs(norm - 1.0) > EMBEDDING_NORM_TOL:
            raise FileFormatError(
                f"{path}: instance {inst_id} embedding norm {norm} is not 1")
    return InstanceMask(id=inst_id, label=label, point_indices=indices,
                        embedding=embedding, confidence=confidence)


def read_instances(path: str, n_points: int) -> tuple[list[InstanceMask], int]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"{path}: cannot parse instances file: {exc}") from exc
    if not isinstance(doc, dict) or "instances" not in doc:
        raise FileFormatError(f"{path}: expected an object with an 'instances' list")
    dim = int(doc.get("embedding_dim", DEFAULT_EMBEDDING_DIM))
    if dim <= 0:
        raise FileFormatError(f"{path}: embedding_dim must be positive, got {dim}")
    claimed = np.zeros(n_points, dtype=bool)
    instances = []
    seen_ids: set[int] = set()
    for record in doc["instances"]:
        inst = _parse_instance(record, n_points, dim, claimed, path)
        if inst.id in seen_ids:
            raise FileFormatError(f"{path}: duplicate instance id {inst.id}")
        seen_ids.add(inst.id)
        instances.append(inst)
    return instances, dim


def write_instances(path: str, instances: list[InstanceMask], embedding_dim: int) -> None:
    doc = {
        "embedding_dim": embedding_dim,
        "instances": [
            {
                "id": inst.id,
                "label": inst.label,
                "confidence": inst.confidence,
                "point_indices": [int(i) for i in inst.point_indices],
                "embedding": None if inst.embedding is None
                else [float(x) for x in inst.embedding],
            }
            for inst in instances
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_scene(cloud_path: str, instances_path: str) -> PointCloudScene:
    """Load and validate a (cloud, instances) file pair into a scene."""
    points, colors = read_ply(cloud_path)
    instances, dim = read_instances(instances_path, len(points))
    return PointCloudScene(points=points, colors=colors, instances=instances,
                           embedding_dim=dim)


def save_scene(scene: PointCloudScene, cloud_path: str, instances_path: str) -> None:
    write_ply(cloud_path, scene.points, scene.colors)
    write_instances(instances_path, scene.instances, scene.embedding_dim)
