"""Shared fixtures: the tuned sphere scene, a small on-disk sequence, and
an acceptance-summary hook that prints one line per acceptance criterion."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import pytest

import voxfuse as vf

# Sphere scene used by fidelity/meshing tests: 20 narrow-FOV views on a
# Fibonacci lattice, each integrating only the cap it measures near-frontally.
SPHERE_CENTER = np.array([0.0, 0.0, 0.0])
SPHERE_RADIUS = 0.2
SPHERE_VIEWS = 20
SPHERE_CAM_DISTANCE = 0.7
SPHERE_RES = 200
SPHERE_HALF_FOV_DEG = 11.0
VOXEL_SIZE = 0.01
TRUNCATION_VOXELS = 4


def sphere_intrinsics() -> vf.Intrinsics:
    fx = (SPHERE_RES / 2) / np.tan(np.radians(SPHERE_HALF_FOV_DEG))
    return vf.Intrinsics(fx=fx, fy=fx, cx=(SPHERE_RES - 1) / 2, cy=(SPHERE_RES - 1) / 2,
                         width=SPHERE_RES, height=SPHERE_RES)


@dataclass
class SphereCase:
    layer: vf.TsdfLayer
    mesh: vf.FeaturePointCloud
    integrate_seconds: float
    mesh_seconds: float


@pytest.fixture(scope="session")
def sphere_case() -> SphereCase:
    import time

    intr = sphere_intrinsics()
    layer = vf.TsdfLayer(vf.GridSpec(VOXEL_SIZE, TRUNCATION_VOXELS))
    config = vf.TsdfConfig(max_integration_distance_m=SPHERE_CAM_DISTANCE + 0.5)
    t0 = time.monotonic()
    for pose in vf.orbit_poses(SPHERE_CENTER, SPHERE_CAM_DISTANCE, SPHERE_VIEWS):
        depth = vf.analytic_sphere_depth(SPHERE_CENTER, SPHERE_RADIUS, pose, intr)
        vf.integrate_depth_frame(layer, depth, pose, intr, config)
    t1 = time.monotonic()
    mesh, _ = vf.extract_feature_mesh(layer, None)
    t2 = time.monotonic()
    return SphereCase(layer=layer, mesh=mesh,
                      integrate_seconds=t1 - t0, mesh_seconds=t2 - t1)


def make_plane_scene_frames(n_frames: int = 3, res: int = 64):
    """Posed frames of a frontal plane at z=1 m, left half red / right blue."""
    fx = float(res)
    intr = vf.Intrinsics(fx=fx, fy=fx, cx=(res - 1) / 2, cy=(res - 1) / 2,
                         width=res, height=res)
    frames = []
    for i in range(n_frames):
        eye = np.array([0.02 * i - 0.02, 0.0, 0.0])
        pose = vf.Pose(np.eye(3), eye)
        depth = vf.analytic_plane_depth((0.0, 0.0, 1.0), (0.0, 0.0, -1.0), pose, intr)
        color = np.zeros((res, res, 3), dtype=np.float32)
        # Columns left of the camera axis see world x < eye.x: color by pixel.
        color[:, : res // 2, 0] = 255.0
        color[:, res // 2 :, 2] = 255.0
        frames.append((depth, color, pose, intr))
    return frames


def write_sequence_manifest(directory, frames, depth_as_u16: bool = False) -> str:
    """Write frames as TensorFiles plus a manifest; returns the manifest path."""
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (depth, color, pose, intr) in enumerate(frames):
        depth_name = f"depth_{i:03d}.bin"
        if depth_as_u16:
            vf.write_tensor(directory / depth_name,
                            np.round(depth.data.astype(np.float64) * 1000).astype(np.uint16))
        else:
            vf.write_tensor(directory / depth_name, depth.data)
        entry = {
            "depth_path": depth_name,
            "pose": [float(v) for v in pose.matrix().reshape(-1)],
            "intrinsics": {
                "fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy,
                "width": intr.width, "height": intr.height,
            },
            "timestamp": float(i) * 0.1,
        }
        if color is not None:
            color_name = f"color_{i:03d}.bin"
            vf.write_tensor(directory / color_name, color.astype(np.float32))
            entry["color_path"] = color_name
        entries.append(entry)
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps({"frames": entries}, indent=1))
    return str(manifest)


@pytest.fixture()
def plane_manifest(tmp_path):
    return write_sequence_manifest(tmp_path / "seq", make_plane_scene_frames())


# One pass/fail line per acceptance criterion at the end of the run.
_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _ACCEPTANCE_RESULTS.append((name, report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, outcome in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"  {name}: {outcome}")
