"""FastAPI service wrapping the reconstruction engine.

Two groups of endpoints:

  Sessions   stateful mappers for streaming use: create one, post depth
             and feature frames, update and fetch the featurized mesh.
  Batch      /reconstruct, /export-ply, /query, /stats operate on files
             reachable from the server process, mirroring the CLI 1:1.

Engine errors surface as JSON {"error": {"type", "message"}}; ConfigError
maps to 422 (usage), other engine errors to 400 (data), unknown sessions
to 404.
"""

from __future__ import annotations

import threading
import uuid

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..cloud import nearest_feature_in_cloud
from ..errors import ConfigError, VoxfuseError
from ..feature_tools import pca_colorize
from ..features import FeatureFusionConfig
from ..io import export_ply, load_snapshot
from ..camera import Intrinsics, Pose
from ..mapper import Mapper
from ..mesher import MeshingConfig
from ..pipeline import reconstruct_sequence
from ..tsdf import TsdfConfig
from . import schemas


class SessionRegistry:
    """In-memory mapper sessions; one writer at a time per mapper."""

    def __init__(self):
        self._lock = threading.Lock()
        self._sessions: dict[str, Mapper] = {}

    def create(self, mapper: Mapper) -> str:
        session_id = uuid.uuid4().hex
        with self._lock:
            self._sessions[session_id] = mapper
        return session_id

    def get(self, session_id: str) -> Mapper | None:
        with self._lock:
            return self._sessions.get(session_id)

    def drop(self, session_id: str) -> bool:
        with self._lock:
            return self._sessions.pop(session_id, None) is not None


def _pose_from_flat(values: list[float]) -> Pose:
    return Pose.from_matrix(np.asarray(values, dtype=np.float64).reshape(4, 4))


def _intrinsics(model: schemas.IntrinsicsModel) -> Intrinsics:
    return Intrinsics(fx=model.fx, fy=model.fy, cx=model.cx, cy=model.cy,
                      width=model.width, height=model.height)


def create_app() -> FastAPI:
    app = FastAPI(title="voxfuse", version=__version__)
    sessions = SessionRegistry()

    class UnknownSession(Exception):
        def __init__(self, session_id: str):
            self.session_id = session_id

    @app.exception_handler(VoxfuseError)
    async def _engine_error(_: Request, exc: VoxfuseError):
        status = 422 if isinstance(exc, ConfigError) else 400
        body = schemas.ErrorBody(type=type(exc).__name__, message=str(exc))
        return JSONResponse(status_code=status, content={"error": body.model_dump()})

    @app.exception_handler(UnknownSession)
    async def _unknown_session(_: Request, exc: UnknownSession):
        body = schemas.ErrorBody(type="UnknownSession",
                                 message=f"no session {exc.session_id}")
        return JSONResponse(status_code=404, content={"error": body.model_dump()})

    def _session_or_404(session_id: str) -> Mapper:
        mapper = sessions.get(session_id)
        if mapper is None:
            raise UnknownSession(session_id)
        return mapper

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/sessions", response_model=schemas.CreateSessionResponse)
    def create_session(req: schemas.CreateSessionRequest):
        mapper = Mapper(
            req.voxel_size_m,
            truncation_voxels=req.truncation_voxels,
            feature_dim=req.feature_dim,
            fusion=FeatureFusionConfig(mode=req.fusion_mode, alpha=req.alpha),
            tsdf=TsdfConfig(max_weight=req.max_weight,
                            max_integration_distance_m=req.max_integration_distance_m),
            meshing=MeshingConfig(
                min_tsdf_weight=req.min_tsdf_weight,
                feature_query_radius_voxels=req.feature_query_radius_voxels,
            ),
        )
        return schemas.CreateSessionResponse(session_id=sessions.create(mapper))

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        if not sessions.drop(session_id):
            raise UnknownSession(session_id)
        return {"deleted": session_id}

    @app.post("/sessions/{session_id}/depth-frame",
              response_model=schemas.IntegrationResponse)
    def add_depth_frame(session_id: str, req: schemas.DepthFrameRequest):
        mapper = _session_or_404(session_id)
        depth = req.depth.to_array(expected_ndim=2, what="depth image")
        stats = mapper.add_depth_frame(depth, _pose_from_flat(req.pose),
                                       _intrinsics(req.intrinsics))
        return schemas.IntegrationResponse(voxels_updated=stats.voxels_updated,
                                           blocks_allocated=stats.blocks_allocated)

    @app.post("/sessions/{session_id}/feature-frame",
              response_model=schemas.IntegrationResponse)
    def add_feature_frame(session_id: str, req: schemas.FeatureFrameRequest):
        mapper = _session_or_404(session_id)
        features = req.features.to_array(expected_ndim=3, what="feature image")
        stats = mapper.add_feature_frame(features, _pose_from_flat(req.pose),
                                         _intrinsics(req.intrinsics))
        return schemas.IntegrationResponse(voxels_updated=stats.voxels_updated,
                                           blocks_allocated=stats.blocks_allocated)

    @app.post("/sessions/{session_id}/mesh/update",
              response_model=schemas.MeshUpdateResponse)
    def update_mesh(session_id: str):
        mapper = _session_or_404(session_id)
        stats = mapper.update_feature_mesh()
        return schemas.MeshUpdateResponse(
            vertex_count=stats.vertices_emitted,
            vertices_dropped=stats.vertices_dropped,
            cells_meshed=stats.cells_meshed,
        )

    @app.get("/sessions/{session_id}/mesh", response_model=schemas.MeshResponse)
    def get_mesh(session_id: str):
        mapper = _session_or_404(session_id)
        cloud = mapper.get_feature_mesh()
        return schemas.MeshResponse(
            vertices=schemas.TensorPayload.from_array(cloud.points),
            features=schemas.TensorPayload.from_array(cloud.features),
            feature_dim=cloud.feature_dim,
        )

    @app.post("/reconstruct", response_model=schemas.ReconstructResponse)
    def reconstruct(req: schemas.ReconstructRequest):
        report = reconstruct_sequence(
            req.manifest_path,
            req.out_dir,
            voxel_size_m=req.voxel_size_m,
            truncation_voxels=req.truncation_voxels,
            fusion=FeatureFusionConfig(mode=req.fusion_mode, alpha=req.alpha),
            snapshot_every=req.snapshot_every,
        )
        return schemas.ReconstructResponse(**report.__dict__)

    @app.post("/export-ply", response_model=schemas.ExportPlyResponse)
    def export_ply_endpoint(req: schemas.ExportPlyRequest):
        snapshot = load_snapshot(req.snapshot_path)
        colors = None
        if req.colorize == "pca" and len(snapshot.cloud) > 0:
            colors = pca_colorize(snapshot.cloud.features)
        export_ply(snapshot.cloud, req.out_path, colors)
        return schemas.ExportPlyResponse(out_path=req.out_path,
                                         vertex_count=len(snapshot.cloud))

    @app.post("/query", response_model=schemas.QueryResponse)
    def query(req: schemas.QueryRequest):
        snapshot = load_snapshot(req.snapshot_path)
        radius_m = req.radius_voxels * snapshot.voxel_size_m
        feature = nearest_feature_in_cloud(snapshot.cloud, req.point, radius_m)
        return schemas.QueryResponse(
            feature=None if feature is None else [float(v) for v in feature]
        )

    @app.post("/stats", response_model=schemas.SnapshotStatsResponse)
    def snapshot_stats(req: schemas.StatsRequest):
        snapshot = load_snapshot(req.snapshot_path)
        bbox = snapshot.cloud.bounding_box()
        return schemas.SnapshotStatsResponse(
            vertex_count=len(snapshot.cloud),
            feature_dim=snapshot.cloud.feature_dim,
            voxel_size_m=snapshot.voxel_size_m,
            bbox_min=None if bbox is None else [float(v) for v in bbox[0]],
            bbox_max=None if bbox is None else [float(v) for v in bbox[1]],
        )

    return app


app = create_app()
