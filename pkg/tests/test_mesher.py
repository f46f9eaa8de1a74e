import numpy as np
import pytest

import voxfuse as vf

from conftest import SPHERE_CENTER, SPHERE_RADIUS, VOXEL_SIZE


def _layer_with_cell(corner_dists, weight=1.0, base=(4, 4, 4)):
    """TSDF layer with one fully observed cell at global min-corner ``base``.

    corner_dists maps corner offset (0/1 per axis) to distance.
    """
    spec = vf.GridSpec(0.01, 4)
    layer = vf.TsdfLayer(spec)
    block = layer.get_or_allocate_block((0, 0, 0))
    for (ox, oy, oz), dist in corner_dists.items():
        idx = (base[0] + ox, base[1] + oy, base[2] + oz)
        block.distance[idx] = dist
        block.weight[idx] = weight
    return spec, layer


def _single_corner_cell(inside_value=-0.005, outside_value=0.005):
    dists = {(ox, oy, oz): outside_value
             for ox in (0, 1) for oy in (0, 1) for oz in (0, 1)}
    dists[(0, 0, 0)] = inside_value
    return _layer_with_cell(dists)


class TestSingleCell:
    def test_one_inside_corner_gives_three_midpoint_vertices(self):
        spec, layer = _single_corner_cell()
        cloud, stats = vf.extract_feature_mesh(layer, None)
        assert len(cloud) == 3
        assert stats.cells_meshed == 1
        # corner (4,4,4) center is (0.045, 0.045, 0.045); the symmetric
        # -0.005/+0.005 crossing puts vertices at the incident edge midpoints
        expected = np.array([
            [0.050, 0.045, 0.045],
            [0.045, 0.050, 0.045],
            [0.045, 0.045, 0.050],
        ], dtype=np.float32)
        got = cloud.points[np.lexsort(cloud.points.T[::-1])]
        want = expected[np.lexsort(expected.T[::-1])]
        np.testing.assert_allclose(got, want, atol=1e-7)

    def test_all_positive_cell_gives_nothing(self):
        dists = {(ox, oy, oz): 0.005 for ox in (0, 1) for oy in (0, 1) for oz in (0, 1)}
        _, layer = _layer_with_cell(dists)
        cloud, stats = vf.extract_feature_mesh(layer, None)
        assert len(cloud) == 0 and stats.cells_meshed == 0

    def test_partially_observed_cell_skipped(self):
        spec, layer = _single_corner_cell()
        # knock out one corner's weight
        layer.blocks[(0, 0, 0)].weight[5, 4, 4] = 0.0
        cloud, _ = vf.extract_feature_mesh(layer, None)
        assert len(cloud) == 0

    def test_min_weight_gating(self):
        spec, layer = _single_corner_cell()
        cloud, _ = vf.extract_feature_mesh(layer, None, vf.MeshingConfig(min_tsdf_weight=2.0))
        assert len(cloud) == 0

    def test_zero_distance_counts_as_inside(self):
        dists = {(ox, oy, oz): 0.005 for ox in (0, 1) for oy in (0, 1) for oz in (0, 1)}
        dists[(0, 0, 0)] = 0.0
        _, layer = _layer_with_cell(dists)
        cloud, _ = vf.extract_feature_mesh(layer, None)
        # crossing at t=0: all three edge vertices coincide with the corner
        # center and merge into one
        assert len(cloud) == 1
        np.testing.assert_allclose(cloud.points[0], [0.045, 0.045, 0.045], atol=1e-7)

    def test_mismatched_specs_rejected(self):
        _, layer = _single_corner_cell()
        feature_layer = vf.FeatureLayer(vf.GridSpec(0.02, 4), feature_dim=2)
        with pytest.raises(vf.FrameError):
            vf.extract_feature_mesh(layer, feature_layer)


class TestSharedEdges:
    def test_adjacent_cells_merge_shared_vertices(self):
        # two inside corners side by side create adjacent meshed cells with
        # shared edge crossings; dedup must merge them exactly
        dists = {}
        for ox in range(-1, 3):
            for oy in (0, 1):
                for oz in (0, 1):
                    dists[(ox, oy, oz)] = 0.005
        dists[(0, 0, 0)] = -0.005
        dists[(1, 0, 0)] = -0.005
        spec = vf.GridSpec(0.01, 4)
        layer = vf.TsdfLayer(spec)
        block = layer.get_or_allocate_block((0, 0, 0))
        for (ox, oy, oz), dist in dists.items():
            idx = (4 + ox, 4 + oy, 4 + oz)
            block.distance[idx] = dist
            block.weight[idx] = 1.0
        cloud, _ = vf.extract_feature_mesh(layer, None)
        # no duplicate rows
        rows = {tuple(row) for row in cloud.points.tolist()}
        assert len(rows) == len(cloud)

    def test_cells_across_block_boundary(self):
        # inside corner at the +x block face: the cell's other corners live
        # in the neighbouring block
        spec = vf.GridSpec(0.01, 4)
        layer = vf.TsdfLayer(spec)
        a = layer.get_or_allocate_block((0, 0, 0))
        b = layer.get_or_allocate_block((1, 0, 0))
        for ox, oy, oz in ((0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
                           (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)):
            g = (7 + ox, 4 + oy, 4 + oz)
            block = a if g[0] < 8 else b
            idx = (g[0] % 8, g[1], g[2])
            block.distance[idx] = -0.005 if (ox, oy, oz) == (0, 0, 0) else 0.005
            block.weight[idx] = 1.0
        cloud, _ = vf.extract_feature_mesh(layer, None)
        assert len(cloud) == 3


class TestSphereSurface:
    def test_vertices_on_sphere(self, sphere_case):
        mesh = sphere_case.mesh
        assert len(mesh) > 3000
        radii = np.linalg.norm(mesh.points.astype(np.float64) - SPHERE_CENTER, axis=1)
        assert np.abs(radii - SPHERE_RADIUS).max() < VOXEL_SIZE

    def test_zero_level_at_vertices(self, sphere_case):
        for row in sphere_case.mesh.points:
            value = vf.interpolate_tsdf(sphere_case.layer, row)
            assert value is not None
            assert abs(value) < 1e-4

    def test_re_extraction_is_identical(self, sphere_case):
        again, _ = vf.extract_feature_mesh(sphere_case.layer, None)
        assert again.bit_equal(sphere_case.mesh)


class TestVertexFeatures:
    def _featured_scene(self):
        spec, layer = _single_corner_cell()
        feature_layer = vf.FeatureLayer(spec, feature_dim=2)
        block = feature_layer.get_or_allocate_block((0, 0, 0))
        block.feature[4, 4, 4] = (2.0, 3.0)
        block.observed[4, 4, 4] = True
        return layer, feature_layer

    def test_vertices_tagged_with_nearest_feature(self):
        layer, feature_layer = self._featured_scene()
        cloud, stats = vf.extract_feature_mesh(layer, feature_layer)
        assert len(cloud) == 3
        assert stats.vertices_dropped == 0
        np.testing.assert_array_equal(cloud.features,
                                      np.tile((2.0, 3.0), (3, 1)).astype(np.float32))

    def test_vertices_without_feature_dropped(self):
        layer, feature_layer = self._featured_scene()
        # move the only observed feature voxel far away
        block = feature_layer.blocks[(0, 0, 0)]
        block.observed[4, 4, 4] = False
        block = feature_layer.get_or_allocate_block((3, 3, 3))
        block.observed[0, 0, 0] = True
        cloud, stats = vf.extract_feature_mesh(layer, feature_layer,
                                               vf.MeshingConfig(feature_query_radius_voxels=1))
        assert len(cloud) == 0
        assert stats.vertices_dropped == 3


class TestInterpolateTsdf:
    def test_linear_field_reproduced(self):
        # fill a block with a linear function of x; trilinear must be exact
        spec = vf.GridSpec(0.01, 4)
        layer = vf.TsdfLayer(spec)
        block = layer.get_or_allocate_block((0, 0, 0))
        for ix in range(8):
            block.distance[ix, :, :] = np.float32(0.001 * ix)
            block.weight[ix, :, :] = 1.0
        p = (0.0371, 0.02, 0.02)
        value = vf.interpolate_tsdf(layer, p)
        # centers at x=(ix+0.5)*0.01 carry 0.001*ix, so f(x) = 0.1*x - 0.0005
        assert value == pytest.approx(0.1 * p[0] - 0.0005, abs=1e-9)

    def test_unobserved_region_returns_none(self):
        layer = vf.TsdfLayer(vf.GridSpec(0.01, 4))
        assert vf.interpolate_tsdf(layer, (0.5, 0.5, 0.5)) is None
