import json
import struct

import numpy as np
import pytest

import voxfuse as vf

from conftest import make_plane_scene_frames, write_sequence_manifest


class TestTensorFile:
    def test_f32_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        arr = rng.normal(size=(5, 7, 3)).astype(np.float32)
        path = tmp_path / "t.bin"
        vf.write_tensor(path, arr)
        back = vf.read_tensor(path)
        assert back.dtype == np.dtype("<f4")
        np.testing.assert_array_equal(back.view(np.uint32), arr.view(np.uint32))

    def test_u16_round_trip(self, tmp_path):
        arr = np.arange(12, dtype=np.uint16).reshape(3, 4)
        path = tmp_path / "t.bin"
        vf.write_tensor(path, arr)
        np.testing.assert_array_equal(vf.read_tensor(path), arr)

    def test_header_layout(self, tmp_path):
        arr = np.zeros((2, 3), np.float32)
        path = tmp_path / "t.bin"
        vf.write_tensor(path, arr)
        raw = path.read_bytes()
        assert raw[:4] == b"FTNS"
        version, dtype_code, ndim = struct.unpack_from("<III", raw, 4)
        assert (version, dtype_code, ndim) == (1, 0, 2)
        assert struct.unpack_from("<2Q", raw, 16) == (2, 3)
        assert len(raw) == 16 + 16 + 24

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "t.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(vf.TensorError) as err:
            vf.read_tensor(path)
        assert "t.bin" in str(err.value)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "t.bin"
        vf.write_tensor(path, np.zeros((4, 4), np.float32))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(vf.TensorError):
            vf.read_tensor(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(vf.MissingFileError):
            vf.read_tensor(tmp_path / "absent.bin")


class TestManifest:
    def test_fixture_loads_in_order(self, tmp_path):
        manifest = write_sequence_manifest(tmp_path / "seq", make_plane_scene_frames(3))
        frames = list(vf.load_sequence(manifest))
        assert len(frames) == 3
        assert [f.timestamp for f in frames] == sorted(f.timestamp for f in frames)
        assert frames[0].color is not None
        assert frames[0].depth.width == 64

    def test_decreasing_timestamps_rejected(self, tmp_path):
        manifest_path = write_sequence_manifest(tmp_path / "seq", make_plane_scene_frames(2))
        doc = json.loads(open(manifest_path).read())
        doc["frames"][1]["timestamp"] = -1.0
        open(manifest_path, "w").write(json.dumps(doc))
        with pytest.raises(vf.ManifestError):
            vf.load_manifest(manifest_path)

    def test_missing_referenced_file(self, tmp_path):
        manifest_path = write_sequence_manifest(tmp_path / "seq", make_plane_scene_frames(2))
        doc = json.loads(open(manifest_path).read())
        doc["frames"][0]["depth_path"] = "nowhere.bin"
        open(manifest_path, "w").write(json.dumps(doc))
        with pytest.raises(vf.MissingFileError) as err:
            vf.load_manifest(manifest_path)
        assert "nowhere.bin" in str(err.value)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("{not json")
        with pytest.raises(vf.ManifestError):
            vf.load_manifest(path)

    def test_u16_millimeter_conversion(self, tmp_path):
        frames = make_plane_scene_frames(1, res=16)
        manifest = write_sequence_manifest(tmp_path / "seq", frames, depth_as_u16=True)
        loaded = next(iter(vf.load_sequence(manifest)))
        # depths near 1.0 m encode as 1000 mm within rounding
        valid = loaded.depth.data[loaded.depth.data > 0]
        assert np.all(np.abs(valid - 1.0) < 0.02)
        assert loaded.depth.data.dtype == np.float32

    def test_u16_value_is_divided_by_1000(self, tmp_path):
        d = tmp_path / "seq"
        d.mkdir()
        vf.write_tensor(d / "depth.bin", np.full((2, 2), 1500, np.uint16))
        (d / "manifest.json").write_text(json.dumps({"frames": [{
            "depth_path": "depth.bin",
            "pose": list(np.eye(4).reshape(-1)),
            "intrinsics": {"fx": 2.0, "fy": 2.0, "cx": 0.5, "cy": 0.5,
                           "width": 2, "height": 2},
            "timestamp": 0.0,
        }]}))
        frame = next(iter(vf.load_sequence(d / "manifest.json")))
        np.testing.assert_array_equal(frame.depth.data, np.full((2, 2), 1.5, np.float32))

    def test_depth_unit_must_match_dtype(self, tmp_path):
        d = tmp_path / "seq"
        d.mkdir()
        vf.write_tensor(d / "depth.bin", np.full((2, 2), 1500, np.uint16))
        (d / "manifest.json").write_text(json.dumps({"frames": [{
            "depth_path": "depth.bin",
            "pose": list(np.eye(4).reshape(-1)),
            "intrinsics": {"fx": 2.0, "fy": 2.0, "cx": 0.5, "cy": 0.5,
                           "width": 2, "height": 2},
            "timestamp": 0.0,
            "depth_unit": "m",
        }]}))
        with pytest.raises(vf.TensorError):
            list(vf.load_sequence(d / "manifest.json"))


class TestSnapshot:
    def _cloud(self, n=17, f=5, seed=2):
        rng = np.random.default_rng(seed)
        return vf.FeaturePointCloud(rng.normal(size=(n, 3)).astype(np.float32),
                                    rng.normal(size=(n, f)).astype(np.float32))

    def test_round_trip_bit_exact(self, tmp_path):
        cloud = self._cloud()
        path = tmp_path / "snap.bin"
        vf.save_snapshot(vf.Snapshot(cloud, 0.01), path)
        loaded = vf.load_snapshot(path)
        assert loaded.voxel_size_m == np.float32(0.01)
        assert loaded.cloud.bit_equal(cloud)

    def test_empty_cloud(self, tmp_path):
        path = tmp_path / "snap.bin"
        vf.save_snapshot(vf.Snapshot(vf.FeaturePointCloud.empty(4), 0.02), path)
        loaded = vf.load_snapshot(path)
        assert len(loaded.cloud) == 0 and loaded.cloud.feature_dim == 4

    def test_header_layout(self, tmp_path):
        cloud = self._cloud(n=2, f=1)
        path = tmp_path / "snap.bin"
        vf.save_snapshot(vf.Snapshot(cloud, 0.01), path)
        raw = path.read_bytes()
        assert raw[:4] == b"MMAP"
        version, voxel, fdim, count = struct.unpack_from("<IfIQ", raw, 4)
        assert (version, fdim, count) == (1, 1, 2)
        assert voxel == np.float32(0.01)
        assert len(raw) == 24 + 2 * 3 * 4 + 2 * 1 * 4

    def test_corrupt_length_rejected(self, tmp_path):
        path = tmp_path / "snap.bin"
        vf.save_snapshot(vf.Snapshot(self._cloud(), 0.01), path)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(vf.TensorError):
            vf.load_snapshot(path)


def parse_ply(path):
    """Minimal independent binary-little-endian PLY reader."""
    raw = open(path, "rb").read()
    end = raw.index(b"end_header\n") + len(b"end_header\n")
    header = raw[:end].decode("ascii").splitlines()
    assert header[0] == "ply"
    assert header[1] == "format binary_little_endian 1.0"
    count = int(next(line.split()[-1] for line in header if line.startswith("element vertex")))
    props = [line.split()[1:] for line in header if line.startswith("property")]
    fmt = ""
    for kind, _ in props:
        fmt += {"float": "f", "uchar": "B"}[kind]
    size = struct.calcsize("<" + fmt)
    body = raw[end:]
    assert len(body) == count * size
    return [struct.unpack_from("<" + fmt, body, i * size) for i in range(count)]


class TestPly:
    def test_single_point_header(self, tmp_path):
        cloud = vf.FeaturePointCloud(np.array([[1.0, 2.0, 3.0]], np.float32),
                                     np.zeros((1, 2), np.float32))
        path = tmp_path / "out.ply"
        vf.export_ply(cloud, path)
        assert b"element vertex 1" in path.read_bytes()

    def test_empty_cloud_valid(self, tmp_path):
        path = tmp_path / "out.ply"
        vf.export_ply(vf.FeaturePointCloud.empty(0), path)
        assert parse_ply(path) == []
        assert b"element vertex 0" in path.read_bytes()

    def test_round_trip_exact_f32(self, tmp_path):
        rng = np.random.default_rng(3)
        points = rng.normal(size=(9, 3)).astype(np.float32)
        cloud = vf.FeaturePointCloud(points, np.zeros((9, 0), np.float32))
        path = tmp_path / "out.ply"
        vf.export_ply(cloud, path)
        rows = parse_ply(path)
        np.testing.assert_array_equal(np.asarray(rows, np.float32), points)

    def test_colors_written_as_uchar(self, tmp_path):
        cloud = vf.FeaturePointCloud(np.zeros((2, 3), np.float32),
                                     np.zeros((2, 1), np.float32))
        colors = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.25]])
        path = tmp_path / "out.ply"
        vf.export_ply(cloud, path, colors)
        rows = parse_ply(path)
        assert rows[0][3:] == (255, 0, 128)
        assert rows[1][3:] == (0, 255, 64)

    def test_color_shape_checked(self, tmp_path):
        cloud = vf.FeaturePointCloud(np.zeros((2, 3), np.float32),
                                     np.zeros((2, 1), np.float32))
        with pytest.raises(vf.TensorError):
            vf.export_ply(cloud, tmp_path / "out.ply", np.zeros((3, 3)))
