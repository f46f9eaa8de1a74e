"""Sequence ingest and on-disk formats.

Three bit-specified formats live here:

  TensorFile  magic "FTNS" | u32 version | u32 dtype (0=f32, 1=u16) |
              u32 ndim | u64 dims[ndim] | C-order little-endian payload
  Snapshot    magic "MMAP" | u32 version | f32 voxel_size | u32 feature_dim |
              u64 vertex_count | f32 points[N*3] | f32 features[N*f]
  PLY export  binary_little_endian 1.0, float x/y/z (+ uchar red/green/blue)

plus the JSON sequence manifest: {"frames": [{"depth_path": ..., "pose":
[16 row-major world-from-camera], "intrinsics": {fx, fy, cx, cy, width,
height}, "timestamp": ..., "color_path"?, "feature_path"?, "depth_unit"?},
...]}. Paths resolve relative to the manifest location. Depth files hold
either f32 meters or u16 millimeters; the dtype decides the unit, and a
declared depth_unit must agree with it.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .camera import DepthImage, FeatureImage, Frame, Intrinsics, Pose
from .cloud import FeaturePointCloud
from .errors import ManifestError, MissingFileError, TensorError

TENSOR_MAGIC = b"FTNS"
SNAPSHOT_MAGIC = b"MMAP"
TENSOR_VERSION = 1
SNAPSHOT_VERSION = 1

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<u2")}
_DTYPE_TO_CODE = {np.dtype("<f4"): 0, np.dtype("<u2"): 1}


def write_tensor(path, array) -> None:
    """Serialize an array as a TensorFile. Only f32 and u16 payloads."""
    arr = np.asarray(array)
    if arr.dtype == np.float64 or arr.dtype == np.float32:
        arr = arr.astype("<f4")
    elif arr.dtype == np.uint16:
        arr = arr.astype("<u2")
    else:
        raise TensorError(f"unsupported tensor dtype {arr.dtype}", path)
    code = _DTYPE_TO_CODE[arr.dtype]
    arr = np.ascontiguousarray(arr)
    with open(path, "wb") as f:
        f.write(TENSOR_MAGIC)
        f.write(struct.pack("<II", TENSOR_VERSION, code))
        f.write(struct.pack("<I", arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        f.write(arr.tobytes(order="C"))


def read_tensor(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError("tensor file not found", path)
    raw = path.read_bytes()
    if len(raw) < 16 or raw[:4] != TENSOR_MAGIC:
        raise TensorError("bad tensor magic", path)
    version, code, ndim = struct.unpack_from("<III", raw, 4)
    if version != TENSOR_VERSION:
        raise TensorError(f"unsupported tensor version {version}", path)
    if code not in _DTYPE_CODES:
        raise TensorError(f"unknown dtype code {code}", path)
    header_end = 16 + 8 * ndim
    if len(raw) < header_end:
        raise TensorError("truncated tensor header", path)
    dims = struct.unpack_from(f"<{ndim}Q", raw, 16)
    dtype = _DTYPE_CODES[code]
    expected = int(np.prod(dims, dtype=np.uint64)) * dtype.itemsize
    payload = raw[header_end:]
    if len(payload) != expected:
        raise TensorError(
            f"payload is {len(payload)} bytes, dims {dims} require {expected}", path
        )
    return np.frombuffer(payload, dtype=dtype).reshape(dims).copy()


@dataclass
class FrameRecord:
    depth_path: Path
    pose: Pose
    intrinsics: Intrinsics
    timestamp: float
    color_path: Path | None = None
    feature_path: Path | None = None
    depth_unit: str | None = None


def load_manifest(path) -> list[FrameRecord]:
    """Parse and validate a sequence manifest; checks referenced files exist."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError("manifest not found", path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ManifestError(f"manifest is not valid JSON: {e}", path)
    if not isinstance(doc, dict) or not isinstance(doc.get("frames"), list):
        raise ManifestError('manifest must be an object with a "frames" list', path)

    base = path.parent
    records = []
    prev_ts = None
    for i, entry in enumerate(doc["frames"]):
        where = f"frames[{i}]"
        if not isinstance(entry, dict):
            raise ManifestError(f"{where} is not an object", path)
        try:
            pose = Pose.from_matrix(np.asarray(entry["pose"], dtype=np.float64).reshape(4, 4))
            intr = Intrinsics(**entry["intrinsics"])
            ts = float(entry["timestamp"])
            depth_rel = entry["depth_path"]
        except KeyError as e:
            raise ManifestError(f"{where} missing field {e}", path)
        except (TypeError, ValueError) as e:
            raise ManifestError(f"{where} malformed: {e}", path)
        if prev_ts is not None and ts <= prev_ts:
            raise ManifestError(
                f"{where} timestamp {ts} not strictly increasing after {prev_ts}", path
            )
        prev_ts = ts

        record = FrameRecord(
            depth_path=base / depth_rel,
            pose=pose,
            intrinsics=intr,
            timestamp=ts,
            color_path=base / entry["color_path"] if entry.get("color_path") else None,
            feature_path=base / entry["feature_path"] if entry.get("feature_path") else None,
            depth_unit=entry.get("depth_unit"),
        )
        if record.depth_unit not in (None, "m", "mm"):
            raise ManifestError(f"{where} depth_unit must be 'm' or 'mm'", path)
        for p in (record.depth_path, record.color_path, record.feature_path):
            if p is not None and not p.is_file():
                raise MissingFileError(f"{where} references missing file", p)
        records.append(record)
    return records


def _load_depth(record: FrameRecord) -> DepthImage:
    arr = read_tensor(record.depth_path)
    if arr.ndim != 2:
        raise TensorError(f"depth tensor must be 2-D, got shape {arr.shape}",
                          record.depth_path)
    if arr.dtype == np.uint16:
        if record.depth_unit == "m":
            raise TensorError("manifest declares meters but tensor is u16 millimeters",
                              record.depth_path)
        depth = (arr.astype(np.float64) / 1000.0).astype(np.float32)
    else:
        if record.depth_unit == "mm":
            raise TensorError("manifest declares millimeters but tensor is f32 meters",
                              record.depth_path)
        depth = arr.astype(np.float32)
    return DepthImage(depth)


def load_sequence(manifest_path) -> Iterator[Frame]:
    """Yield frames of a manifest in timestamp order, tensors loaded lazily."""
    for record in load_manifest(manifest_path):
        depth = _load_depth(record)
        if depth.width != record.intrinsics.width or depth.height != record.intrinsics.height:
            raise TensorError(
                f"depth {depth.height}x{depth.width} does not match intrinsics "
                f"{record.intrinsics.height}x{record.intrinsics.width}",
                record.depth_path,
            )
        features = None
        if record.feature_path is not None:
            feat = read_tensor(record.feature_path)
            if feat.ndim != 3:
                raise TensorError(f"feature tensor must be 3-D, got shape {feat.shape}",
                                  record.feature_path)
            features = FeatureImage(feat.astype(np.float32))
        color = None
        if record.color_path is not None:
            color = read_tensor(record.color_path)
            if color.ndim != 3 or color.shape[2] != 3:
                raise TensorError(f"color tensor must be (h, w, 3), got shape {color.shape}",
                                  record.color_path)
        yield Frame(
            depth=depth,
            pose=record.pose,
            intrinsics=record.intrinsics,
            features=features,
            color=color,
            timestamp=record.timestamp,
        )


@dataclass
class Snapshot:
    """A serialized featurized vertex cloud for one timestamp."""

    cloud: FeaturePointCloud
    voxel_size_m: float


def save_snapshot(snapshot: Snapshot, path) -> None:
    cloud = snapshot.cloud
    with open(path, "wb") as f:
        f.write(SNAPSHOT_MAGIC)
        f.write(struct.pack("<IfIQ", SNAPSHOT_VERSION, snapshot.voxel_size_m,
                            cloud.feature_dim, len(cloud)))
        f.write(np.ascontiguousarray(cloud.points, dtype="<f4").tobytes(order="C"))
        f.write(np.ascontiguousarray(cloud.features, dtype="<f4").tobytes(order="C"))


def load_snapshot(path) -> Snapshot:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError("snapshot not found", path)
    raw = path.read_bytes()
    if len(raw) < 24 or raw[:4] != SNAPSHOT_MAGIC:
        raise TensorError("bad snapshot magic", path)
    version, voxel_size, feature_dim, count = struct.unpack_from("<IfIQ", raw, 4)
    if version != SNAPSHOT_VERSION:
        raise TensorError(f"unsupported snapshot version {version}", path)
    offset = 24
    points_bytes = count * 3 * 4
    features_bytes = count * feature_dim * 4
    if len(raw) != offset + points_bytes + features_bytes:
        raise TensorError(
            f"snapshot is {len(raw)} bytes, header requires "
            f"{offset + points_bytes + features_bytes}", path
        )
    points = np.frombuffer(raw, dtype="<f4", count=count * 3, offset=offset)
    features = np.frombuffer(raw, dtype="<f4", count=count * feature_dim,
                             offset=offset + points_bytes)
    cloud = FeaturePointCloud(points.reshape(count, 3).copy(),
                              features.reshape(count, feature_dim).copy())
    return Snapshot(cloud=cloud, voxel_size_m=float(voxel_size))


def export_ply(cloud: FeaturePointCloud, path, colors=None) -> None:
    """Write a binary little-endian PLY vertex cloud.

    colors, when given, is an (N, 3) array in [0, 1] stored as uchar.
    """
    n = len(cloud)
    props = ["property float x", "property float y", "property float z"]
    if colors is not None:
        colors = np.asarray(colors, dtype=np.float64)
        if colors.shape != (n, 3):
            raise TensorError(f"colors must be ({n}, 3), got {colors.shape}", path)
        props += ["property uchar red", "property uchar green", "property uchar blue"]
    header = "\n".join(
        ["ply", "format binary_little_endian 1.0", f"element vertex {n}"]
        + props + ["end_header", ""]
    )
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        if colors is None:
            f.write(np.ascontiguousarray(cloud.points, dtype="<f4").tobytes(order="C"))
        else:
            rgb = np.clip(np.rint(colors * 255.0), 0, 255).astype(np.uint8)
            record = np.zeros(n, dtype=[("xyz", "<f4", 3), ("rgb", "u1", 3)])
            record["xyz"] = cloud.points
            record["rgb"] = rgb
            f.write(record.tobytes())
