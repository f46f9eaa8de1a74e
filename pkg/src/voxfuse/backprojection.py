"""Back-projection of posed frames to featurized point clouds, plus
fixed-budget subsampling for token-count control."""

from __future__ import annotations

import numpy as np

from .camera import Frame, apply_rigid, project_many, unproject
from .cloud import FeaturePointCloud
from .errors import ConfigError, FrameError


def backproject_frame(frame: Frame, stride: int = 1) -> FeaturePointCloud:
    """Lift every valid depth pixel on the stride grid to a world point.

    Output rows follow row-major pixel order (v outer, u inner). Each point
    carries the nearest-neighbour feature at its pixel, sampled through
    intrinsics rescaled to the feature image resolution.
    """
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    if frame.features is None:
        raise FrameError("backproject_frame requires a feature image")

    intr = frame.intrinsics
    us = np.arange(0, intr.width, stride, dtype=np.float64)
    vs = np.arange(0, intr.height, stride, dtype=np.float64)
    vv, uu = np.meshgrid(vs, us, indexing="ij")
    u = uu.ravel()
    v = vv.ravel()
    d = frame.depth.data[v.astype(np.int64), u.astype(np.int64)].astype(np.float64)
    valid = d > 0.0
    if not valid.any():
        return FeaturePointCloud.empty(frame.features.feature_dim)
    u, v, d = u[valid], v[valid], d[valid]

    p_cam = unproject(u, v, d, intr)
    p_world = apply_rigid(frame.pose.rotation, frame.pose.translation, p_cam)

    # Depth-grid pixels always land inside the rescaled feature image up to
    # rounding at the border, so out-of-range lookups clamp to the edge.
    feat_intr = intr.scaled(frame.features.width, frame.features.height)
    uf, vf = project_many(p_cam, feat_intr)
    ui = np.clip(np.rint(uf), 0, feat_intr.width - 1).astype(np.int64)
    vi = np.clip(np.rint(vf), 0, feat_intr.height - 1).astype(np.int64)
    feats = frame.features.data[vi, ui]
    return FeaturePointCloud(p_world, feats)


def subsample(
    cloud: FeaturePointCloud, n: int, method: str = "random", seed: int = 0
) -> FeaturePointCloud:
    """Reduce a cloud to at most n rows, keeping point/feature pairing.

    random: uniform choice without replacement, rows kept in original order.
    farthest_point: greedy max-min selection seeded at a random row, rows
    in selection order. Both are deterministic for a given seed.
    """
    if n < 0:
        raise ConfigError(f"target count must be >= 0, got {n}")
    total = len(cloud)
    if total <= n:
        return cloud
    rng = np.random.default_rng(seed)
    if method == "random":
        idx = np.sort(rng.choice(total, size=n, replace=False))
        return cloud.take(idx)
    if method == "farthest_point":
        return cloud.take(_farthest_point_indices(cloud.points, n, rng))
    raise ConfigError(f"unknown subsample method {method!r}")


def _farthest_point_indices(points: np.ndarray, n: int, rng) -> np.ndarray:
    pts = points.astype(np.float64)
    chosen = np.empty(n, dtype=np.int64)
    chosen[0] = rng.integers(len(pts))
    dist_sq = np.sum((pts - pts[chosen[0]]) ** 2, axis=1)
    for i in range(1, n):
        nxt = int(np.argmax(dist_sq))  # first occurrence wins ties
        chosen[i] = nxt
        dist_sq = np.minimum(dist_sq, np.sum((pts - pts[nxt]) ** 2, axis=1))
    return chosen
