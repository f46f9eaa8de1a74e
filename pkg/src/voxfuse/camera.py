"""Pinhole camera model, rigid transforms, and posed sensor frames.

Conventions:
  - Camera looks along +Z; +X is right (pixel u), +Y is down (pixel v).
  - Pixel (u, v) addresses the pixel center at integer coordinates;
    nearest-neighbour lookup rounds half-to-even and rejects out-of-bounds.
  - Poses are world-from-camera.
  - Projection is ``u = fx * (x / z) + cx`` with the division performed
    first; integrators and test oracles rely on this exact operation order
    for bit-reproducible results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FrameError, GeometryError


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise GeometryError(f"focal lengths must be positive, got fx={self.fx} fy={self.fy}")
        if self.width <= 0 or self.height <= 0:
            raise GeometryError(f"image size must be positive, got {self.width}x{self.height}")

    def scaled(self, width: int, height: int) -> "Intrinsics":
        """Intrinsics for a resampled image of the given size.

        Focal lengths and principal point scale by the resolution ratio;
        used for feature images whose resolution differs from depth.
        """
        sx = width / self.width
        sy = height / self.height
        return Intrinsics(
            fx=self.fx * sx,
            fy=self.fy * sy,
            cx=self.cx * sx,
            cy=self.cy * sy,
            width=width,
            height=height,
        )


def apply_rigid(rotation: np.ndarray, translation: np.ndarray, points) -> np.ndarray:
    """Apply R @ p + t over points of shape (..., 3).

    Written out per component so vectorized and scalar callers run the
    identical float operation sequence.
    """
    pts = np.asarray(points, dtype=np.float64)
    x = pts[..., 0]
    y = pts[..., 1]
    z = pts[..., 2]
    out = np.empty(pts.shape, dtype=np.float64)
    out[..., 0] = rotation[0, 0] * x + rotation[0, 1] * y + rotation[0, 2] * z + translation[0]
    out[..., 1] = rotation[1, 0] * x + rotation[1, 1] * y + rotation[1, 2] * z + translation[1]
    out[..., 2] = rotation[2, 0] * x + rotation[2, 1] * y + rotation[2, 2] * z + translation[2]
    return out


@dataclass(frozen=True)
class Pose:
    """World-from-camera rigid transform."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64)
        trans = np.asarray(self.translation, dtype=np.float64)
        if rot.shape != (3, 3) or trans.shape != (3,):
            raise GeometryError(f"pose shapes must be (3,3)/(3,), got {rot.shape}/{trans.shape}")
        if not (np.all(np.isfinite(rot)) and np.all(np.isfinite(trans))):
            raise GeometryError("pose contains non-finite values")
        if np.max(np.abs(rot.T @ rot - np.eye(3))) > 1e-6:
            raise GeometryError("rotation is not orthonormal within 1e-6")
        if abs(np.linalg.det(rot) - 1.0) > 1e-6:
            raise GeometryError("rotation determinant is not +1 within 1e-6")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix) -> "Pose":
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (4, 4):
            raise GeometryError(f"pose matrix must be 4x4, got {m.shape}")
        if np.max(np.abs(m[3] - (0.0, 0.0, 0.0, 1.0))) > 1e-9:
            raise GeometryError(f"pose matrix bottom row must be [0 0 0 1], got {m[3]}")
        return cls(m[:3, :3], m[:3, 3])

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def transform(self, points) -> np.ndarray:
        """Map camera-frame points to world frame, shape-preserving."""
        return apply_rigid(self.rotation, self.translation, points)

    def inverse(self) -> "Pose":
        rot = self.rotation.T
        return Pose(rot, -(rot @ self.translation))

    def compose(self, other: "Pose") -> "Pose":
        """Composition that applies ``other`` first, then ``self``."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def approx_equal(self, other: "Pose", tol: float = 0.0) -> bool:
        return (
            np.max(np.abs(self.rotation - other.rotation)) <= tol
            and np.max(np.abs(self.translation - other.translation)) <= tol
        )


def project(p_cam, intrinsics: Intrinsics) -> tuple[float, float]:
    """Project a camera-frame point to pixel coordinates.

    Raises GeometryError for points at or behind the camera plane.
    Bounds are the caller's responsibility.
    """
    p = np.asarray(p_cam, dtype=np.float64)
    if p[2] <= 0:
        raise GeometryError(f"cannot project point with z <= 0 (z={p[2]})")
    u = intrinsics.fx * (p[0] / p[2]) + intrinsics.cx
    v = intrinsics.fy * (p[1] / p[2]) + intrinsics.cy
    return float(u), float(v)


def project_many(p_cam: np.ndarray, intrinsics: Intrinsics) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection over (..., 3) camera points.

    No z checks; entries with z <= 0 produce inf/nan for the caller to mask.
    Operation order matches project().
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        u = intrinsics.fx * (p_cam[..., 0] / p_cam[..., 2]) + intrinsics.cx
        v = intrinsics.fy * (p_cam[..., 1] / p_cam[..., 2]) + intrinsics.cy
    return u, v


def unproject(u, v, depth, intrinsics: Intrinsics) -> np.ndarray:
    """Lift pixel coordinates at a given z-depth to a camera-frame point."""
    d = np.asarray(depth, dtype=np.float64)
    if np.any(d <= 0):
        raise GeometryError("unproject requires depth > 0")
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    x = (u - intrinsics.cx) / intrinsics.fx * d
    y = (v - intrinsics.cy) / intrinsics.fy * d
    return np.stack(np.broadcast_arrays(x, y, d), axis=-1)


def nearest_pixel(u, v, width: int, height: int):
    """Round pixel coordinates half-to-even; returns (ui, vi, in_bounds)."""
    ui = np.rint(np.asarray(u, dtype=np.float64))
    vi = np.rint(np.asarray(v, dtype=np.float64))
    ok = (ui >= 0) & (ui < width) & (vi >= 0) & (vi < height)
    ui = np.where(ok, ui, 0).astype(np.int64)
    vi = np.where(ok, vi, 0).astype(np.int64)
    return ui, vi, ok


class DepthImage:
    """Depth along camera +Z in meters; 0 marks an invalid pixel."""

    def __init__(self, data):
        arr = np.asarray(data)
        if arr.ndim != 2:
            raise FrameError(f"depth image must be 2-D (h, w), got shape {arr.shape}")
        arr = arr.astype(np.float32, copy=False)
        if not np.all(np.isfinite(arr)):
            raise FrameError("depth image contains non-finite values")
        if np.any(arr < 0):
            raise FrameError("depth image contains negative values")
        self.data = arr

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def matches(self, intrinsics: Intrinsics) -> bool:
        return self.width == intrinsics.width and self.height == intrinsics.height


class FeatureImage:
    """Dense per-pixel feature map, shape (h, w, f), stored as float32."""

    def __init__(self, data):
        arr = np.asarray(data)
        if arr.ndim != 3 or arr.shape[2] < 1:
            raise FrameError(f"feature image must be (h, w, f>=1), got shape {arr.shape}")
        arr = arr.astype(np.float32, copy=False)
        if not np.all(np.isfinite(arr)):
            raise FrameError("feature image contains non-finite values")
        self.data = arr

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.data.shape[2]


@dataclass
class Frame:
    """One posed sensor observation."""

    depth: DepthImage
    pose: Pose
    intrinsics: Intrinsics
    features: FeatureImage | None = None
    color: np.ndarray | None = None
    timestamp: float = 0.0

    def __post_init__(self):
        if not self.depth.matches(self.intrinsics):
            raise FrameError(
                f"depth image {self.depth.height}x{self.depth.width} does not match "
                f"intrinsics {self.intrinsics.height}x{self.intrinsics.width}"
            )
