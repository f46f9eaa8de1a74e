"""Analytic depth generators and pose helpers.

These render exact depth images of spheres and planes, used as oracles in
tests and handy for producing demo sequences. Pixels whose ray misses the
geometry are invalid (0).
"""

from __future__ import annotations

import numpy as np

from .camera import DepthImage, Intrinsics, Pose, apply_rigid
from .errors import GeometryError


def _pixel_rays(intrinsics: Intrinsics) -> np.ndarray:
    """Per-pixel ray directions (h, w, 3) in camera frame, z normalized to 1."""
    u = np.arange(intrinsics.width, dtype=np.float64)
    v = np.arange(intrinsics.height, dtype=np.float64)
    uu, vv = np.meshgrid(u, v)
    x = (uu - intrinsics.cx) / intrinsics.fx
    y = (vv - intrinsics.cy) / intrinsics.fy
    return np.stack([x, y, np.ones_like(x)], axis=-1)


def analytic_sphere_depth(
    center, radius: float, pose: Pose, intrinsics: Intrinsics
) -> DepthImage:
    """Exact z-depth of a sphere surface seen from the given camera."""
    if radius <= 0:
        raise GeometryError(f"sphere radius must be positive, got {radius}")
    cam_from_world = pose.inverse()
    c = apply_rigid(cam_from_world.rotation, cam_from_world.translation,
                    np.asarray(center, dtype=np.float64))

    rays = _pixel_rays(intrinsics)
    # Ray p(s) = s * dir with dir_z = 1, so the z-depth of the hit equals s.
    a = np.sum(rays * rays, axis=-1)
    b = -2.0 * np.sum(rays * c, axis=-1)
    cc = float(c @ c) - radius * radius
    disc = b * b - 4.0 * a * cc
    hit = disc >= 0.0
    sqrt_disc = np.sqrt(np.where(hit, disc, 0.0))
    s_near = (-b - sqrt_disc) / (2.0 * a)
    s_far = (-b + sqrt_disc) / (2.0 * a)
    # Nearest intersection in front of the camera.
    s = np.where(s_near > 0.0, s_near, s_far)
    depth = np.where(hit & (s > 0.0), s, 0.0)
    return DepthImage(depth.astype(np.float32))


def analytic_plane_depth(
    point_on_plane, normal, pose: Pose, intrinsics: Intrinsics
) -> DepthImage:
    """Exact z-depth of an infinite plane; back-facing rays are invalid."""
    n = np.asarray(normal, dtype=np.float64)
    norm = np.linalg.norm(n)
    if norm == 0:
        raise GeometryError("plane normal must be nonzero")
    n = n / norm
    cam_from_world = pose.inverse()
    p0 = apply_rigid(cam_from_world.rotation, cam_from_world.translation,
                     np.asarray(point_on_plane, dtype=np.float64))
    n_cam = cam_from_world.rotation @ n

    rays = _pixel_rays(intrinsics)
    denom = np.sum(rays * n_cam, axis=-1)
    num = float(p0 @ n_cam)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = num / denom
    depth = np.where(np.isfinite(s) & (s > 0.0), s, 0.0)
    return DepthImage(depth.astype(np.float32))


def look_at_pose(eye, target, up_hint=(0.0, 0.0, 1.0)) -> Pose:
    """World-from-camera pose with +Z toward target, +X right, +Y down."""
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    norm = np.linalg.norm(forward)
    if norm == 0:
        raise GeometryError("look_at eye and target coincide")
    forward = forward / norm
    up = np.asarray(up_hint, dtype=np.float64)
    right = np.cross(up, forward)
    if np.linalg.norm(right) < 1e-9:
        right = np.cross((1.0, 0.0, 0.0), forward)
    right = right / np.linalg.norm(right)
    down = np.cross(forward, right)
    rotation = np.column_stack([right, down, forward])
    return Pose(rotation, eye)


def orbit_poses(center, distance: float, count: int) -> list[Pose]:
    """Camera poses spread over a sphere around ``center``, all looking at it.

    Uses a Fibonacci lattice for even coverage; deterministic for a given
    count. Latitudes stay off the poles so the up hint never degenerates.
    """
    center = np.asarray(center, dtype=np.float64)
    poses = []
    golden = np.pi * (3.0 - np.sqrt(5.0))
    zmax = 0.98  # keep view directions off the exact poles
    for i in range(count):
        z = -zmax + 2.0 * zmax * (i + 0.5) / count
        r = np.sqrt(1.0 - z * z)
        theta = golden * i
        direction = np.array([r * np.cos(theta), r * np.sin(theta), z])
        poses.append(look_at_pose(center + distance * direction, center))
    return poses
