"""Projective truncated signed distance integration.

Each depth frame updates voxels by projecting their centers into the image
(KinectFusion-style). For a voxel center at camera depth z and measured
pixel depth d, the projective signed distance is ``sdf = d - z``. Voxels
more than one truncation distance behind the surface are occluded and left
untouched; everything else is clamped to +truncation and merged into the
running weighted average:

    distance <- (W * D + w * d) / (W + w)
    weight   <- min(W + w, max_weight)

with constant measurement weight w = 1. Distances are computed in float64
and stored as float32; the per-voxel operation order is fixed so results
are bit-reproducible (and equal to a scalar re-implementation of the same
formulas).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import DepthImage, Intrinsics, Pose, apply_rigid, nearest_pixel, project_many
from .errors import ConfigError, FrameError
from .grid import BlockIndex, GridSpec, TsdfLayer


@dataclass(frozen=True)
class TsdfConfig:
    max_weight: float = 100.0
    max_integration_distance_m: float = 5.0
    # Only constant per-measurement weighting is implemented; the field is a
    # policy switch so alternatives (e.g. 1/z^2 falloff) can be added without
    # changing the call surface.
    weight_policy: str = "constant"

    def __post_init__(self):
        if self.max_weight < 1:
            raise ConfigError(f"max_weight must be >= 1, got {self.max_weight}")
        if self.max_integration_distance_m <= 0:
            raise ConfigError(
                f"max_integration_distance_m must be > 0, got {self.max_integration_distance_m}"
            )
        if self.weight_policy != "constant":
            raise ConfigError(f"unknown weight policy {self.weight_policy!r}")


@dataclass
class IntegrationStats:
    voxels_updated: int = 0
    blocks_allocated: int = 0
    blocks_in_view: int = 0


def view_frustum_blocks(
    pose: Pose, intrinsics: Intrinsics, max_distance: float, spec: GridSpec
) -> list[BlockIndex]:
    """Blocks possibly intersecting the camera frustum out to max_distance.

    Conservative: never misses an intersecting block, may include a few
    extra near the frustum boundary. Blocks are tested with the standard
    AABB-vs-frustum half-space rejection, with a one-pixel margin on the
    image bounds.
    """
    cam_from_world = pose.inverse()
    margin = 1.0

    # World AABB of the frustum = hull of the apex and four far corners.
    corners_px = np.array(
        [
            (-0.5 - margin, -0.5 - margin),
            (intrinsics.width - 0.5 + margin, -0.5 - margin),
            (-0.5 - margin, intrinsics.height - 0.5 + margin),
            (intrinsics.width - 0.5 + margin, intrinsics.height - 0.5 + margin),
        ]
    )
    far = np.stack(
        [
            (corners_px[:, 0] - intrinsics.cx) / intrinsics.fx * max_distance,
            (corners_px[:, 1] - intrinsics.cy) / intrinsics.fy * max_distance,
            np.full(4, max_distance),
        ],
        axis=-1,
    )
    hull = np.vstack([np.zeros((1, 3)), far])
    hull_world = pose.transform(hull)

    bs = spec.block_size_m
    lo = np.floor(hull_world.min(axis=0) / bs).astype(np.int64)
    hi = np.floor(hull_world.max(axis=0) / bs).astype(np.int64)

    bx, by, bz = np.meshgrid(
        np.arange(lo[0], hi[0] + 1),
        np.arange(lo[1], hi[1] + 1),
        np.arange(lo[2], hi[2] + 1),
        indexing="ij",
    )
    blocks = np.stack([bx.ravel(), by.ravel(), bz.ravel()], axis=-1)
    if blocks.size == 0:
        return []

    # 8 corners of every candidate block, in camera frame.
    offsets = np.array(
        [(i, j, k) for i in (0, 1) for j in (0, 1) for k in (0, 1)], dtype=np.float64
    )
    corners = (blocks[:, None, :] + offsets[None, :, :]) * bs
    cam = apply_rigid(
        cam_from_world.rotation, cam_from_world.translation, corners.reshape(-1, 3)
    ).reshape(-1, 8, 3)
    x, y, z = cam[..., 0], cam[..., 1], cam[..., 2]

    # Outside tests: a block is culled only if all 8 corners fall outside one
    # frustum half-space. Side planes pass through the camera origin.
    u_lo = -0.5 - margin
    u_hi = intrinsics.width - 0.5 + margin
    v_lo = -0.5 - margin
    v_hi = intrinsics.height - 0.5 + margin
    cull = (
        np.all(z <= 0.0, axis=1)
        | np.all(z > max_distance, axis=1)
        | np.all(intrinsics.fx * x - (u_lo - intrinsics.cx) * z < 0, axis=1)
        | np.all(intrinsics.fx * x - (u_hi - intrinsics.cx) * z > 0, axis=1)
        | np.all(intrinsics.fy * y - (v_lo - intrinsics.cy) * z < 0, axis=1)
        | np.all(intrinsics.fy * y - (v_hi - intrinsics.cy) * z > 0, axis=1)
    )
    keep = blocks[~cull]
    return [tuple(int(v) for v in row) for row in keep]


def _block_voxel_centers(blocks: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Voxel centers for each block, shape (n_blocks, side^3, 3), C order."""
    side = spec.block_side
    ix, iy, iz = np.meshgrid(np.arange(side), np.arange(side), np.arange(side), indexing="ij")
    intra = np.stack([ix.ravel(), iy.ravel(), iz.ravel()], axis=-1)
    g = blocks[:, None, :] * side + intra[None, :, :]
    return (g.astype(np.float64) + 0.5) * spec.voxel_size_m


def integrate_depth_frame(
    layer: TsdfLayer,
    depth: DepthImage,
    pose: Pose,
    intrinsics: Intrinsics,
    config: TsdfConfig | None = None,
) -> IntegrationStats:
    """Fuse one posed depth image into the layer.

    Allocates every block intersecting the view frustum within
    max_integration_distance, then updates each allocated voxel whose
    center (a) is in front of the camera and within integration range,
    (b) projects to a valid depth pixel, and (c) is not occluded beyond
    the truncation band (sdf >= -truncation). All other voxels are
    bit-unchanged.
    """
    config = config or TsdfConfig()
    if not depth.matches(intrinsics):
        raise FrameError(
            f"depth image {depth.height}x{depth.width} does not match intrinsics "
            f"{intrinsics.height}x{intrinsics.width}"
        )

    spec = layer.spec
    tau = spec.truncation_distance_m
    stats = IntegrationStats()

    # No voxel beyond (deepest valid measurement + truncation) can pass the
    # occlusion test for any pixel, so the allocation frustum is capped there.
    deepest = float(depth.data.max())
    reach = min(config.max_integration_distance_m, deepest + tau)
    block_keys = view_frustum_blocks(pose, intrinsics, reach, spec)
    stats.blocks_in_view = len(block_keys)
    if not block_keys:
        return stats
    for key in block_keys:
        if key not in layer.blocks:
            stats.blocks_allocated += 1
        layer.get_or_allocate_block(key)

    blocks_arr = np.asarray(block_keys, dtype=np.int64)
    centers = _block_voxel_centers(blocks_arr, spec)  # (B, S^3, 3)
    cam_from_world = pose.inverse()
    p_cam = apply_rigid(cam_from_world.rotation, cam_from_world.translation, centers)
    z = p_cam[..., 2]

    u, v = project_many(p_cam, intrinsics)
    ui, vi, in_bounds = nearest_pixel(u, v, intrinsics.width, intrinsics.height)
    measured = depth.data[vi, ui].astype(np.float64)

    sdf = measured - z
    update = (
        (z > 0.0)
        & (z <= config.max_integration_distance_m)
        & in_bounds
        & (measured > 0.0)
        & (sdf >= -tau)
    )
    d = np.minimum(sdf, tau)

    side = spec.block_side
    w = 1.0  # constant measurement weight
    for bi, key in enumerate(block_keys):
        mask = update[bi]
        if not mask.any():
            continue
        block = layer.blocks[key]
        # Flat C order over the block matches _block_voxel_centers ordering.
        mask3 = mask.reshape(side, side, side)
        d_old = block.distance[mask3].astype(np.float64)
        w_old = block.weight[mask3].astype(np.float64)
        d_new = (w_old * d_old + w * d[bi][mask]) / (w_old + w)
        w_new = np.minimum(w_old + w, config.max_weight)
        block.distance[mask3] = d_new.astype(np.float32)
        block.weight[mask3] = w_new.astype(np.float32)
        stats.voxels_updated += int(mask.sum())

    return stats
