"""voxfuse: metric-semantic TSDF fusion with featurized vertex extraction."""

from .backprojection import backproject_frame, subsample
from .camera import DepthImage, FeatureImage, Frame, Intrinsics, Pose, project, unproject
from .cloud import FeaturePointCloud, nearest_feature_in_cloud
from .errors import (
    ConfigError,
    DataError,
    FrameError,
    GeometryError,
    GridError,
    ManifestError,
    MissingFileError,
    OrderingError,
    TensorError,
    VoxfuseError,
)
from .feature_tools import pca_colorize, rgb_feature_extractor
from .features import FeatureFusionConfig, integrate_feature_frame, query_nearest_feature
from .grid import (
    FeatureLayer,
    FeatureVoxel,
    GridSpec,
    TsdfLayer,
    TsdfVoxel,
    voxel_center,
    world_to_voxel,
)
from .io import (
    Snapshot,
    export_ply,
    load_manifest,
    load_sequence,
    load_snapshot,
    read_tensor,
    save_snapshot,
    write_tensor,
)
from .mapper import Mapper
from .mesher import MeshingConfig, extract_feature_mesh, interpolate_tsdf
from .pipeline import ReconstructionReport, reconstruct_sequence
from .synthetic import analytic_plane_depth, analytic_sphere_depth, look_at_pose, orbit_poses
from .tsdf import TsdfConfig, integrate_depth_frame

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DepthImage",
    "FeatureFusionConfig",
    "FeatureImage",
    "FeatureLayer",
    "FeaturePointCloud",
    "FeatureVoxel",
    "Frame",
    "FrameError",
    "GeometryError",
    "GridError",
    "GridSpec",
    "Intrinsics",
    "ManifestError",
    "Mapper",
    "MeshingConfig",
    "MissingFileError",
    "OrderingError",
    "Pose",
    "ReconstructionReport",
    "Snapshot",
    "TensorError",
    "TsdfConfig",
    "TsdfLayer",
    "TsdfVoxel",
    "VoxfuseError",
    "analytic_plane_depth",
    "analytic_sphere_depth",
    "backproject_frame",
    "export_ply",
    "extract_feature_mesh",
    "integrate_depth_frame",
    "integrate_feature_frame",
    "interpolate_tsdf",
    "load_manifest",
    "load_sequence",
    "load_snapshot",
    "look_at_pose",
    "nearest_feature_in_cloud",
    "orbit_poses",
    "pca_colorize",
    "project",
    "query_nearest_feature",
    "read_tensor",
    "reconstruct_sequence",
    "rgb_feature_extractor",
    "save_snapshot",
    "subsample",
    "unproject",
    "voxel_center",
    "world_to_voxel",
    "write_tensor",
]
