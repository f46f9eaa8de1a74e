"""Exception hierarchy shared across the engine.

The CLI maps these onto its exit-code contract: ConfigError is a usage
problem (exit 1), everything else under VoxfuseError is a data/runtime
problem (exit 2).
"""


class VoxfuseError(Exception):
    """Base class for all engine errors."""


class ConfigError(VoxfuseError):
    """Invalid configuration value (bad alpha, unsupported mode, ...)."""


class GeometryError(VoxfuseError):
    """Invalid geometric input: behind-camera projection, bad pose matrix."""


class GridError(VoxfuseError):
    """Voxel/block indexing outside the valid range."""


class FrameError(VoxfuseError):
    """Sensor frame inconsistency: shape mismatch, wrong channel count."""


class OrderingError(VoxfuseError):
    """Frames arrived in an order the mapper cannot honor."""


class DataError(VoxfuseError):
    """On-disk data problem. Subclasses identify the failing stage."""

    def __init__(self, message, path=None):
        if path is not None:
            message = f"{message} [{path}]"
        super().__init__(message)
        self.path = str(path) if path is not None else None


class MissingFileError(DataError):
    """A file referenced by a manifest or command does not exist."""


class ManifestError(DataError):
    """Manifest fails to parse or violates the sequence schema."""


class TensorError(DataError):
    """Tensor file is malformed or its dims disagree with the manifest."""
