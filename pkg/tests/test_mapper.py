import numpy as np
import pytest

import voxfuse as vf


def _small_sphere_frames(n=6, res=64):
    center = np.array([0.0, 0.0, 0.0])
    radius = 0.1
    fx = (res / 2) / np.tan(np.radians(14.0))
    intr = vf.Intrinsics(fx=fx, fy=fx, cx=(res - 1) / 2, cy=(res - 1) / 2,
                         width=res, height=res)
    frames = []
    for pose in vf.orbit_poses(center, 0.4, n):
        depth = vf.analytic_sphere_depth(center, radius, pose, intr)
        features = np.tile(np.array([0.2, 0.8], np.float32), (res, res, 1))
        frames.append((depth, features, pose, intr))
    return center, radius, frames


class TestFacade:
    def test_new_mapper_empty_mesh(self):
        mapper = vf.Mapper(0.01, feature_dim=2)
        mesh = mapper.get_feature_mesh()
        assert len(mesh) == 0 and mesh.feature_dim == 2

    def test_voxel_size_list_of_one(self):
        mapper = vf.Mapper([0.02])
        assert mapper.spec.voxel_size_m == 0.02

    def test_multi_resolution_rejected(self):
        with pytest.raises(vf.ConfigError):
            vf.Mapper([0.01, 0.02])

    def test_depth_then_feature_then_mesh(self):
        center, radius, frames = _small_sphere_frames()
        mapper = vf.Mapper(0.01, tsdf=vf.TsdfConfig(max_integration_distance_m=0.8))
        for depth, features, pose, intr in frames:
            mapper.add_depth_frame(depth, pose, intr)
            mapper.add_feature_frame(features, pose, intr)
        mapper.update_feature_mesh()
        mesh = mapper.get_feature_mesh()
        assert len(mesh) > 100
        radii = np.linalg.norm(mesh.points.astype(np.float64) - center, axis=1)
        assert np.abs(radii - radius).max() < 0.01
        np.testing.assert_array_equal(
            mesh.features, np.tile((0.2, 0.8), (len(mesh), 1)).astype(np.float32)
        )

    def test_mesh_reflects_last_update_only(self):
        center, radius, frames = _small_sphere_frames(2)
        mapper = vf.Mapper(0.01, tsdf=vf.TsdfConfig(max_integration_distance_m=0.8))
        depth, features, pose, intr = frames[0]
        mapper.add_depth_frame(depth, pose, intr)
        mapper.add_feature_frame(features, pose, intr)
        mapper.update_feature_mesh()
        first = mapper.get_feature_mesh()
        depth, features, pose, intr = frames[1]
        mapper.add_depth_frame(depth, pose, intr)
        # no update yet: cached mesh unchanged
        assert mapper.get_feature_mesh().bit_equal(first)
        mapper.update_feature_mesh()
        assert not mapper.get_feature_mesh().bit_equal(first)


class TestOrderingContract:
    def test_feature_before_any_depth(self):
        mapper = vf.Mapper(0.01)
        intr = vf.Intrinsics(fx=32.0, fy=32.0, cx=15.5, cy=15.5, width=32, height=32)
        with pytest.raises(vf.OrderingError):
            mapper.add_feature_frame(np.zeros((32, 32, 2), np.float32),
                                     vf.Pose.identity(), intr)

    def test_feature_pose_mismatch(self):
        mapper = vf.Mapper(0.01)
        intr = vf.Intrinsics(fx=32.0, fy=32.0, cx=15.5, cy=15.5, width=32, height=32)
        mapper.add_depth_frame(np.full((32, 32), 0.5, np.float32),
                               vf.Pose.identity(), intr)
        other_pose = vf.Pose(np.eye(3), np.array([0.1, 0.0, 0.0]))
        with pytest.raises(vf.OrderingError):
            mapper.add_feature_frame(np.zeros((32, 32, 2), np.float32), other_pose, intr)

    def test_feature_intrinsics_mismatch(self):
        mapper = vf.Mapper(0.01)
        intr = vf.Intrinsics(fx=32.0, fy=32.0, cx=15.5, cy=15.5, width=32, height=32)
        mapper.add_depth_frame(np.full((32, 32), 0.5, np.float32),
                               vf.Pose.identity(), intr)
        other = vf.Intrinsics(fx=30.0, fy=32.0, cx=15.5, cy=15.5, width=32, height=32)
        with pytest.raises(vf.OrderingError):
            mapper.add_feature_frame(np.zeros((32, 32, 2), np.float32),
                                     vf.Pose.identity(), other)


class TestEquivalence:
    def test_two_mappers_bit_identical(self):
        def run():
            _, _, frames = _small_sphere_frames(4)
            mapper = vf.Mapper(0.01, fusion=vf.FeatureFusionConfig(mode="blend", alpha=0.1),
                               tsdf=vf.TsdfConfig(max_integration_distance_m=0.8))
            for depth, features, pose, intr in frames:
                mapper.add_depth_frame(depth, pose, intr)
                mapper.add_feature_frame(features, pose, intr)
            mapper.update_feature_mesh()
            return mapper.get_feature_mesh()

        assert run().bit_equal(run())

    def test_facade_equals_direct_composition(self):
        _, _, frames = _small_sphere_frames(4)
        fusion = vf.FeatureFusionConfig(mode="blend", alpha=0.25)
        tsdf_config = vf.TsdfConfig(max_integration_distance_m=0.8)
        meshing = vf.MeshingConfig()

        mapper = vf.Mapper(0.01, fusion=fusion, tsdf=tsdf_config, meshing=meshing)
        for depth, features, pose, intr in frames:
            mapper.add_depth_frame(depth, pose, intr)
            mapper.add_feature_frame(features, pose, intr)
        mapper.update_feature_mesh()

        spec = vf.GridSpec(0.01, 4)
        tsdf_layer = vf.TsdfLayer(spec)
        feature_layer = vf.FeatureLayer(spec, feature_dim=2)
        for depth, features, pose, intr in frames:
            vf.integrate_depth_frame(tsdf_layer, vf.DepthImage(depth.data), pose, intr,
                                     tsdf_config)
            vf.integrate_feature_frame(feature_layer, tsdf_layer,
                                       vf.FeatureImage(features), vf.DepthImage(depth.data),
                                       pose, intr, fusion)
        cloud, _ = vf.extract_feature_mesh(tsdf_layer, feature_layer, meshing)

        assert mapper.tsdf_layer.bit_equal(tsdf_layer)
        assert mapper.feature_layer.bit_equal(feature_layer)
        assert mapper.get_feature_mesh().bit_equal(cloud)
