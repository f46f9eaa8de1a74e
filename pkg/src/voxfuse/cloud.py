"""Featurized point clouds: the unit exchanged with downstream policies."""

from __future__ import annotations

import numpy as np

from .errors import FrameError


class FeaturePointCloud:
    """N points with an aligned N x f feature matrix, both float32.

    Rows stay paired through every operation; float32 storage makes
    save/load and service round trips bit-exact.
    """

    def __init__(self, points, features):
        pts = np.ascontiguousarray(points, dtype=np.float32)
        feats = np.ascontiguousarray(features, dtype=np.float32)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise FrameError(f"points must be (N, 3), got {pts.shape}")
        if feats.ndim != 2:
            raise FrameError(f"features must be (N, f), got {feats.shape}")
        if pts.shape[0] != feats.shape[0]:
            raise FrameError(
                f"point/feature row mismatch: {pts.shape[0]} vs {feats.shape[0]}"
            )
        if pts.size and not np.all(np.isfinite(pts)):
            raise FrameError("points contain non-finite values")
        if feats.size and not np.all(np.isfinite(feats)):
            raise FrameError("features contain non-finite values")
        self.points = pts
        self.features = feats

    @classmethod
    def empty(cls, feature_dim: int = 0) -> "FeaturePointCloud":
        return cls(np.zeros((0, 3), dtype=np.float32),
                   np.zeros((0, feature_dim), dtype=np.float32))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def take(self, indices) -> "FeaturePointCloud":
        idx = np.asarray(indices, dtype=np.int64)
        return FeaturePointCloud(self.points[idx], self.features[idx])

    def bit_equal(self, other: "FeaturePointCloud") -> bool:
        return (
            self.points.shape == other.points.shape
            and self.features.shape == other.features.shape
            and np.array_equal(self.points.view(np.uint32), other.points.view(np.uint32))
            and np.array_equal(self.features.view(np.uint32), other.features.view(np.uint32))
        )

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray] | None:
        if len(self) == 0:
            return None
        return self.points.min(axis=0), self.points.max(axis=0)


def nearest_feature_in_cloud(
    cloud: FeaturePointCloud, point, max_radius_m: float
) -> np.ndarray | None:
    """Feature of the cloud point nearest to ``point`` within the radius.

    Ties resolve to the lowest row index. None when the cloud is empty or
    nothing lies within the radius.
    """
    if len(cloud) == 0:
        return None
    p = np.asarray(point, dtype=np.float32).reshape(1, 3)
    d_sq = np.sum((cloud.points - p).astype(np.float64) ** 2, axis=1)
    idx = int(np.argmin(d_sq))
    if d_sq[idx] > float(max_radius_m) ** 2:
        return None
    return cloud.features[idx].copy()
