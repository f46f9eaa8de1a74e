"""Pydantic request/response models for the HTTP service.

Dense arrays travel as base64-encoded little-endian float32 payloads with
an explicit shape, so values survive the wire bit-exactly and decode
straight into typed arrays on any client.
"""

from __future__ import annotations

import base64
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, field_validator

from ..errors import FrameError


class TensorPayload(BaseModel):
    shape: list[int]
    dtype: Literal["f32"] = "f32"
    data_b64: str

    @field_validator("shape")
    @classmethod
    def _non_negative_dims(cls, dims):
        if any(d < 0 for d in dims):
            raise ValueError(f"shape must be non-negative, got {dims}")
        return dims

    @classmethod
    def from_array(cls, array: np.ndarray) -> "TensorPayload":
        arr = np.ascontiguousarray(array, dtype="<f4")
        return cls(shape=list(arr.shape), data_b64=base64.b64encode(arr.tobytes()).decode())

    def to_array(self, expected_ndim: int | None = None, what: str = "tensor") -> np.ndarray:
        raw = base64.b64decode(self.data_b64)
        count = int(np.prod(self.shape, dtype=np.int64)) if self.shape else 1
        if len(raw) != count * 4:
            raise FrameError(
                f"{what} payload is {len(raw)} bytes but shape {self.shape} requires {count * 4}"
            )
        arr = np.frombuffer(raw, dtype="<f4").reshape(self.shape)
        if expected_ndim is not None and arr.ndim != expected_ndim:
            raise FrameError(
                f"{what} must have {expected_ndim} dims, got shape {tuple(arr.shape)}"
            )
        return arr.copy()


class IntrinsicsModel(BaseModel):
    fx: float = Field(gt=0)
    fy: float = Field(gt=0)
    cx: float
    cy: float
    width: int = Field(gt=0)
    height: int = Field(gt=0)


class CreateSessionRequest(BaseModel):
    voxel_size_m: float = Field(default=0.01, gt=0)
    truncation_voxels: int = Field(default=4, ge=1)
    feature_dim: int | None = Field(default=None, ge=1)
    fusion_mode: Literal["overwrite", "blend"] = "overwrite"
    alpha: float = Field(default=0.1, gt=0, le=1)
    max_weight: float = Field(default=100.0, ge=1)
    max_integration_distance_m: float = Field(default=5.0, gt=0)
    min_tsdf_weight: float = Field(default=1.0, ge=0)
    feature_query_radius_voxels: int = Field(default=2, ge=0)


class CreateSessionResponse(BaseModel):
    session_id: str


class DepthFrameRequest(BaseModel):
    depth: TensorPayload
    pose: list[float] = Field(min_length=16, max_length=16)
    intrinsics: IntrinsicsModel


class FeatureFrameRequest(BaseModel):
    features: TensorPayload
    pose: list[float] = Field(min_length=16, max_length=16)
    intrinsics: IntrinsicsModel


class IntegrationResponse(BaseModel):
    voxels_updated: int
    blocks_allocated: int


class MeshUpdateResponse(BaseModel):
    vertex_count: int
    vertices_dropped: int
    cells_meshed: int


class MeshResponse(BaseModel):
    vertices: TensorPayload
    features: TensorPayload
    feature_dim: int


class ReconstructRequest(BaseModel):
    manifest_path: str
    out_dir: str
    voxel_size_m: float = Field(default=0.01, gt=0)
    truncation_voxels: int = Field(default=4, ge=1)
    fusion_mode: Literal["overwrite", "blend"] = "overwrite"
    alpha: float = Field(default=0.1, gt=0, le=1)
    snapshot_every: int | None = Field(default=None, ge=1)


class ReconstructResponse(BaseModel):
    frames: int
    blocks: int
    vertices: int
    snapshot: str
    snapshots_written: int


class ExportPlyRequest(BaseModel):
    snapshot_path: str
    out_path: str
    colorize: Literal["pca", "none"] = "none"


class ExportPlyResponse(BaseModel):
    out_path: str
    vertex_count: int


class QueryRequest(BaseModel):
    snapshot_path: str
    point: list[float] = Field(min_length=3, max_length=3)
    radius_voxels: int = Field(default=2, ge=0)


class QueryResponse(BaseModel):
    feature: list[float] | None


class StatsRequest(BaseModel):
    snapshot_path: str


class SnapshotStatsResponse(BaseModel):
    vertex_count: int
    feature_dim: int
    voxel_size_m: float
    bbox_min: list[float] | None
    bbox_max: list[float] | None


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorBody(BaseModel):
    type: str
    message: str
