"""Fusion of per-pixel feature vectors into the feature voxel layer.

Feature updates are restricted to the occlusion-aware truncation band of
the current depth frame: a voxel qualifies only if its center projects to
a valid depth pixel, lies no further than (measured depth + truncation)
along the ray, and its co-located TSDF voxel has been observed. Qualifying
voxels read their feature by nearest-neighbour pixel lookup, then either
overwrite the stored vector or blend into it with an exponential filter

    f <- alpha * f_new + (1 - alpha) * f_old

The first observation always writes the incoming feature directly, in both
modes, so blending never averages against the zero initialization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import DepthImage, FeatureImage, Intrinsics, Pose, apply_rigid, nearest_pixel, project_many
from .errors import ConfigError, FrameError
from .grid import FeatureLayer, TsdfLayer, global_voxel_center
from .tsdf import IntegrationStats, _block_voxel_centers

FUSION_MODES = ("overwrite", "blend")


@dataclass(frozen=True)
class FeatureFusionConfig:
    mode: str = "overwrite"
    alpha: float = 0.1
    feature_dim: int | None = None

    def __post_init__(self):
        if self.mode not in FUSION_MODES:
            raise ConfigError(f"fusion mode must be one of {FUSION_MODES}, got {self.mode!r}")
        if self.mode == "blend" and not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"blend alpha must be in (0, 1], got {self.alpha}")
        if self.feature_dim is not None and self.feature_dim < 1:
            raise ConfigError(f"feature_dim must be >= 1, got {self.feature_dim}")


def integrate_feature_frame(
    feature_layer: FeatureLayer,
    tsdf_layer: TsdfLayer,
    features: FeatureImage,
    depth: DepthImage,
    pose: Pose,
    intrinsics: Intrinsics,
    config: FeatureFusionConfig | None = None,
) -> IntegrationStats:
    """Fuse one posed feature image into the layer.

    The TSDF layer must already contain this frame's depth integration;
    band membership is read from its state. Only voxels of allocated TSDF
    blocks are considered (candidates elsewhere cannot be TSDF-observed).
    """
    config = config or FeatureFusionConfig()
    if feature_layer.spec != tsdf_layer.spec:
        raise FrameError("feature and TSDF layers use different grid specs")
    if not depth.matches(intrinsics):
        raise FrameError(
            f"depth image {depth.height}x{depth.width} does not match intrinsics "
            f"{intrinsics.height}x{intrinsics.width}"
        )
    if features.feature_dim != feature_layer.feature_dim:
        raise FrameError(
            f"feature image has {features.feature_dim} channels, layer stores "
            f"{feature_layer.feature_dim}"
        )
    if config.feature_dim is not None and config.feature_dim != feature_layer.feature_dim:
        raise FrameError(
            f"fusion config pins feature_dim={config.feature_dim}, layer stores "
            f"{feature_layer.feature_dim}"
        )

    spec = feature_layer.spec
    tau = spec.truncation_distance_m
    side = spec.block_side
    feat_intrinsics = intrinsics.scaled(features.width, features.height)
    cam_from_world = pose.inverse()
    stats = IntegrationStats()

    block_keys = tsdf_layer.sorted_block_indices()
    if not block_keys:
        return stats
    blocks_arr = np.asarray(block_keys, dtype=np.int64)
    centers = _block_voxel_centers(blocks_arr, spec)
    p_cam = apply_rigid(cam_from_world.rotation, cam_from_world.translation, centers)
    z = p_cam[..., 2]

    u_d, v_d = project_many(p_cam, intrinsics)
    ui_d, vi_d, in_depth = nearest_pixel(u_d, v_d, intrinsics.width, intrinsics.height)
    measured = depth.data[vi_d, ui_d].astype(np.float64)

    u_f, v_f = project_many(p_cam, feat_intrinsics)
    ui_f, vi_f, in_feat = nearest_pixel(u_f, v_f, features.width, features.height)

    update = (z > 0.0) & in_depth & in_feat & (measured > 0.0) & (z <= measured + tau)

    alpha = float(config.alpha)
    for bi, key in enumerate(block_keys):
        mask = update[bi]
        if not mask.any():
            continue
        tsdf_block = tsdf_layer.blocks[key]
        mask3 = mask.reshape(side, side, side) & (tsdf_block.weight > 0.0)
        if not mask3.any():
            continue
        mask_flat = mask3.reshape(-1)
        incoming = features.data[vi_f[bi][mask_flat], ui_f[bi][mask_flat]].astype(np.float64)

        if key not in feature_layer.blocks:
            stats.blocks_allocated += 1
        feat_block = feature_layer.get_or_allocate_block(key)
        first_touch = ~feat_block.observed[mask3]
        if config.mode == "blend":
            old = feat_block.feature[mask3].astype(np.float64)
            merged = alpha * incoming + (1.0 - alpha) * old
            merged[first_touch] = incoming[first_touch]
        else:
            merged = incoming
        feat_block.feature[mask3] = merged.astype(np.float32)
        feat_block.observed[mask3] = True
        stats.voxels_updated += int(mask3.sum())
    return stats


def query_nearest_features_batch(
    layer: FeatureLayer, points, max_radius_voxels: int = 2
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized nearest-observed-feature lookup for many points.

    Returns (features (N, f), found (N,)); rows without an observed voxel in
    range are zero with found=False. Semantics identical to
    query_nearest_feature including the lexicographic tie-break.
    """
    if max_radius_voxels < 0:
        raise ConfigError(f"max_radius_voxels must be >= 0, got {max_radius_voxels}")
    spec = layer.spec
    side = spec.block_side
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = pts.shape[0]
    out = np.zeros((n, layer.feature_dim), dtype=np.float32)
    found = np.zeros(n, dtype=bool)
    if n == 0 or not layer.blocks:
        return out, found

    r = int(max_radius_voxels)
    span = np.arange(-r, r + 1, dtype=np.int64)
    ox, oy, oz = np.meshgrid(span, span, span, indexing="ij")
    # C order == lexicographic global-index order per point, so the first
    # candidate at minimal distance is the lexicographic tie-break winner.
    offsets = np.stack([ox.ravel(), oy.ravel(), oz.ravel()], axis=-1)
    k = offsets.shape[0]

    g0 = np.floor(pts / spec.voxel_size_m).astype(np.int64)
    cand = (g0[:, None, :] + offsets[None, :, :]).reshape(-1, 3)

    observed = np.zeros(n * k, dtype=bool)
    features = np.zeros((n * k, layer.feature_dim), dtype=np.float32)
    bkeys = cand // side
    intra = cand - bkeys * side
    uniq, inverse = np.unique(bkeys, axis=0, return_inverse=True)
    for bi, key in enumerate(uniq):
        block = layer.blocks.get((int(key[0]), int(key[1]), int(key[2])))
        if block is None:
            continue
        rows = np.nonzero(inverse == bi)[0]
        ib = intra[rows]
        obs = block.observed[ib[:, 0], ib[:, 1], ib[:, 2]]
        observed[rows] = obs
        hit = rows[obs]
        ih = intra[hit]
        features[hit] = block.feature[ih[:, 0], ih[:, 1], ih[:, 2]]

    centers = (cand.astype(np.float64) + 0.5) * spec.voxel_size_m
    delta = centers.reshape(n, k, 3) - pts[:, None, :]
    d_sq = (delta[..., 0] * delta[..., 0] + delta[..., 1] * delta[..., 1]
            + delta[..., 2] * delta[..., 2])
    d_sq = np.where(observed.reshape(n, k), d_sq, np.inf)
    best = d_sq.min(axis=1)
    found = np.isfinite(best)
    first = np.argmax(d_sq == best[:, None], axis=1)
    rows = np.nonzero(found)[0]
    out[rows] = features.reshape(n, k, -1)[rows, first[rows]]
    return out, found


def query_nearest_feature(
    layer: FeatureLayer, p, max_radius_voxels: int = 2
) -> np.ndarray | None:
    """Feature of the observed voxel nearest to world point p, or None.

    The search covers the (2r+1)^3 neighbourhood of voxel indices around
    the voxel containing p. Nearest is by Euclidean distance between p and
    voxel centers; exact ties resolve to the lexicographically smallest
    global voxel index.
    """
    if max_radius_voxels < 0:
        raise ConfigError(f"max_radius_voxels must be >= 0, got {max_radius_voxels}")
    spec = layer.spec
    side = spec.block_side
    p = np.asarray(p, dtype=np.float64)
    g0 = np.floor(p / spec.voxel_size_m).astype(np.int64)

    best = None  # (dist_sq, (gx, gy, gz), feature)
    r = int(max_radius_voxels)
    for dx in range(-r, r + 1):
        for dy in range(-r, r + 1):
            for dz in range(-r, r + 1):
                g = (int(g0[0]) + dx, int(g0[1]) + dy, int(g0[2]) + dz)
                bkey = (g[0] // side, g[1] // side, g[2] // side)
                block = layer.blocks.get(bkey)
                if block is None:
                    continue
                intra = (g[0] - bkey[0] * side, g[1] - bkey[1] * side, g[2] - bkey[2] * side)
                if not block.observed[intra]:
                    continue
                center = global_voxel_center(g, spec)
                delta = center - p
                dist_sq = float(delta[0] * delta[0] + delta[1] * delta[1] + delta[2] * delta[2])
                if best is None or (dist_sq, g) < (best[0], best[1]):
                    best = (dist_sq, g, block.feature[intra])
    if best is None:
        return None
    return np.array(best[2], dtype=np.float32)
