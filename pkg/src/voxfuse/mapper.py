"""Mapper facade: one TSDF layer and one feature layer at a shared voxel
size, with frame-in / featurized-mesh-out semantics.

    mapper = Mapper(voxel_size_m=0.01)
    for depth, feature, pose, intrinsics in frames:
        mapper.add_depth_frame(depth, pose, intrinsics)
        mapper.add_feature_frame(feature, pose, intrinsics)
    mapper.update_feature_mesh()
    mesh = mapper.get_feature_mesh()

The facade only composes the integrators and mesher; outputs are
bit-identical to calling the modules directly.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .camera import DepthImage, FeatureImage, Intrinsics, Pose
from .cloud import FeaturePointCloud
from .errors import ConfigError, OrderingError
from .features import FeatureFusionConfig, integrate_feature_frame
from .grid import FeatureLayer, GridSpec, TsdfLayer
from .mesher import MeshingConfig, MeshStats, extract_feature_mesh
from .tsdf import IntegrationStats, TsdfConfig, integrate_depth_frame


class Mapper:
    def __init__(
        self,
        voxel_size_m: float | Sequence[float] = 0.01,
        *,
        truncation_voxels: int = 4,
        feature_dim: int | None = None,
        fusion: FeatureFusionConfig | None = None,
        tsdf: TsdfConfig | None = None,
        meshing: MeshingConfig | None = None,
    ):
        if isinstance(voxel_size_m, (list, tuple)):
            if len(voxel_size_m) != 1:
                raise ConfigError(
                    f"exactly one voxel size is supported, got {len(voxel_size_m)}"
                )
            voxel_size_m = voxel_size_m[0]
        self.spec = GridSpec(voxel_size_m=float(voxel_size_m),
                             truncation_voxels=truncation_voxels)
        self.fusion = fusion or FeatureFusionConfig()
        self.tsdf_config = tsdf or TsdfConfig()
        self.meshing = meshing or MeshingConfig()
        if feature_dim is None and self.fusion.feature_dim is not None:
            feature_dim = self.fusion.feature_dim

        self.tsdf_layer = TsdfLayer(self.spec)
        self.feature_layer: FeatureLayer | None = (
            FeatureLayer(self.spec, feature_dim) if feature_dim is not None else None
        )
        self.frames_integrated = 0
        self._mesh: FeaturePointCloud | None = None
        self._last_mesh_stats = MeshStats()
        self._last_depth: tuple[DepthImage, Pose, Intrinsics] | None = None

    @staticmethod
    def _as_depth(depth) -> DepthImage:
        return depth if isinstance(depth, DepthImage) else DepthImage(depth)

    @staticmethod
    def _as_features(features) -> FeatureImage:
        return features if isinstance(features, FeatureImage) else FeatureImage(features)

    def add_depth_frame(self, depth, pose: Pose, intrinsics: Intrinsics) -> IntegrationStats:
        depth = self._as_depth(depth)
        stats = integrate_depth_frame(self.tsdf_layer, depth, pose, intrinsics,
                                      self.tsdf_config)
        self._last_depth = (depth, pose, intrinsics)
        self.frames_integrated += 1
        return stats

    def add_feature_frame(self, features, pose: Pose, intrinsics: Intrinsics) -> IntegrationStats:
        """Fuse a feature image for the most recent depth frame.

        The matching depth frame must already be integrated with the same
        pose and intrinsics; the feature integrator reads its depth image
        for occlusion-band membership.
        """
        if self._last_depth is None:
            raise OrderingError("add_feature_frame before any depth frame")
        depth, depth_pose, depth_intr = self._last_depth
        if depth_intr != intrinsics:
            raise OrderingError(
                "feature frame intrinsics differ from the current depth frame's"
            )
        if not (np.array_equal(depth_pose.rotation, pose.rotation)
                and np.array_equal(depth_pose.translation, pose.translation)):
            raise OrderingError("feature frame pose differs from the current depth frame's")

        features = self._as_features(features)
        if self.feature_layer is None:
            self.feature_layer = FeatureLayer(self.spec, features.feature_dim)
        return integrate_feature_frame(
            self.feature_layer, self.tsdf_layer, features, depth, pose, intrinsics,
            self.fusion,
        )

    def update_feature_mesh(self) -> MeshStats:
        cloud, stats = extract_feature_mesh(self.tsdf_layer, self.feature_layer,
                                            self.meshing)
        self._mesh = cloud
        self._last_mesh_stats = stats
        return stats

    def get_feature_mesh(self) -> FeaturePointCloud:
        """Cloud computed by the last update; empty before the first one."""
        if self._mesh is None:
            dim = self.feature_layer.feature_dim if self.feature_layer is not None else 0
            return FeaturePointCloud.empty(dim)
        return self._mesh

    @property
    def last_mesh_stats(self) -> MeshStats:
        return self._last_mesh_stats

    @property
    def num_tsdf_blocks(self) -> int:
        return self.tsdf_layer.num_blocks
