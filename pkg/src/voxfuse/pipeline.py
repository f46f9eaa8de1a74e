"""Batch reconstruction: manifest in, snapshots out.

This is the engine behind the service's /reconstruct endpoint and the
``reconstruct`` CLI subcommand. Frames are fused in timestamp order; the
feature source per frame is the feature tensor when present, otherwise
RGB triplets from the color image, otherwise nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .feature_tools import rgb_feature_extractor
from .features import FeatureFusionConfig
from .io import Snapshot, load_sequence, save_snapshot
from .mapper import Mapper
from .mesher import MeshingConfig
from .tsdf import TsdfConfig

FINAL_SNAPSHOT_NAME = "snapshot_final.bin"


def snapshot_name(frame_index: int) -> str:
    return f"snapshot_{frame_index:06d}.bin"


@dataclass
class ReconstructionReport:
    frames: int
    blocks: int
    vertices: int
    snapshot: str
    snapshots_written: int


def reconstruct_sequence(
    manifest_path,
    out_dir,
    *,
    voxel_size_m: float = 0.01,
    truncation_voxels: int = 4,
    fusion: FeatureFusionConfig | None = None,
    tsdf: TsdfConfig | None = None,
    meshing: MeshingConfig | None = None,
    snapshot_every: int | None = None,
) -> ReconstructionReport:
    """Fuse a manifest sequence and write the final (and optional
    per-timestamp) snapshots into out_dir."""
    if snapshot_every is not None and snapshot_every < 1:
        raise ConfigError(f"snapshot_every must be >= 1, got {snapshot_every}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    mapper = Mapper(
        voxel_size_m,
        truncation_voxels=truncation_voxels,
        fusion=fusion,
        tsdf=tsdf,
        meshing=meshing,
    )

    written = 0
    frame_index = -1
    for frame_index, frame in enumerate(load_sequence(manifest_path)):
        mapper.add_depth_frame(frame.depth, frame.pose, frame.intrinsics)
        features = frame.features
        if features is None and frame.color is not None:
            features = rgb_feature_extractor(frame.color, normalize=True)
        if features is not None:
            mapper.add_feature_frame(features, frame.pose, frame.intrinsics)
        if snapshot_every is not None and (frame_index + 1) % snapshot_every == 0:
            mapper.update_feature_mesh()
            save_snapshot(
                Snapshot(mapper.get_feature_mesh(), voxel_size_m),
                out_dir / snapshot_name(frame_index),
            )
            written += 1

    mapper.update_feature_mesh()
    final_path = out_dir / FINAL_SNAPSHOT_NAME
    save_snapshot(Snapshot(mapper.get_feature_mesh(), voxel_size_m), final_path)
    written += 1

    return ReconstructionReport(
        frames=frame_index + 1,
        blocks=mapper.num_tsdf_blocks,
        vertices=len(mapper.get_feature_mesh()),
        snapshot=str(final_path),
        snapshots_written=written,
    )
