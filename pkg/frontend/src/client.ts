/**
 * Session client for the reconstruction service, mirroring the mapper
 * facade one-to-one:
 *
 *   const mapper = await Mapper.create("http://127.0.0.1:8760", { voxel_size_m: 0.01 });
 *   await mapper.add_depth_frame(depth, pose, intrinsics);
 *   await mapper.add_feature_frame(features, pose, intrinsics);
 *   await mapper.update_feature_mesh();
 *   const mesh = await mapper.get_feature_mesh();
 *
 * Arrays cross the wire as base64 float32, so values are bit-identical to
 * what the engine computes and stores in snapshots.
 */

import { ServiceError, ShapeError } from "./errors";
import { fromPayload, toPayload } from "./tensors";

export interface Intrinsics {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
}

/** Row-major 4x4 world-from-camera matrix. */
export type Pose = number[];

export interface DepthFrame {
  data: Float32Array;
  height: number;
  width: number;
}

export interface FeatureFrame {
  data: Float32Array;
  height: number;
  width: number;
  featureDim: number;
}

export interface MapperOptions {
  voxel_size_m?: number;
  truncation_voxels?: number;
  feature_dim?: number;
  fusion_mode?: "overwrite" | "blend";
  alpha?: number;
  max_weight?: number;
  max_integration_distance_m?: number;
  min_tsdf_weight?: number;
  feature_query_radius_voxels?: number;
}

export interface IntegrationStats {
  voxels_updated: number;
  blocks_allocated: number;
}

export interface MeshUpdateStats {
  vertex_count: number;
  vertices_dropped: number;
  cells_meshed: number;
}

export interface FeatureMesh {
  vertices: Float32Array;
  features: Float32Array;
  vertexCount: number;
  featureDim: number;
}

async function request(baseUrl: string, method: string, path: string, body?: unknown) {
  const response = await fetch(baseUrl + path, {
    method,
    headers: { "content-type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  const parsed = (await response.json().catch(() => ({}))) as Record<string, unknown>;
  if (!response.ok) {
    const err = parsed?.error as { type?: string; message?: string } | undefined;
    if (err?.type) {
      throw new ServiceError(err.type, err.message ?? "", response.status);
    }
    throw new ServiceError("HTTPError", JSON.stringify(parsed), response.status);
  }
  return parsed;
}

function checkPose(pose: Pose): void {
  if (!Array.isArray(pose) || pose.length !== 16) {
    throw new ShapeError(`pose must be 16 row-major values, got length ${pose?.length}`);
  }
}

export class Mapper {
  private constructor(
    private readonly baseUrl: string,
    readonly sessionId: string
  ) {}

  static async create(baseUrl: string, options: MapperOptions = {}): Promise<Mapper> {
    const body = (await request(baseUrl, "POST", "/sessions", options)) as {
      session_id: string;
    };
    return new Mapper(baseUrl.replace(/\/$/, ""), body.session_id);
  }

  async add_depth_frame(
    depth: DepthFrame,
    pose: Pose,
    intrinsics: Intrinsics
  ): Promise<IntegrationStats> {
    checkPose(pose);
    if (depth.data.length !== depth.height * depth.width) {
      throw new ShapeError(
        `depth image must be height*width=${depth.height}x${depth.width}=` +
          `${depth.height * depth.width} values, got ${depth.data.length}`
      );
    }
    const body = await request(this.baseUrl, "POST", `/sessions/${this.sessionId}/depth-frame`, {
      depth: toPayload(depth.data, [depth.height, depth.width]),
      pose,
      intrinsics,
    });
    return body as unknown as IntegrationStats;
  }

  async add_feature_frame(
    features: FeatureFrame,
    pose: Pose,
    intrinsics: Intrinsics
  ): Promise<IntegrationStats> {
    checkPose(pose);
    const expected = features.height * features.width * features.featureDim;
    if (features.data.length !== expected) {
      throw new ShapeError(
        `feature image must be height*width*featureDim=` +
          `${features.height}x${features.width}x${features.featureDim}=${expected} values, ` +
          `got ${features.data.length}`
      );
    }
    const body = await request(this.baseUrl, "POST", `/sessions/${this.sessionId}/feature-frame`, {
      features: toPayload(features.data, [features.height, features.width, features.featureDim]),
      pose,
      intrinsics,
    });
    return body as unknown as IntegrationStats;
  }

  async update_feature_mesh(): Promise<MeshUpdateStats> {
    const body = await request(this.baseUrl, "POST", `/sessions/${this.sessionId}/mesh/update`);
    return body as unknown as MeshUpdateStats;
  }

  async get_feature_mesh(): Promise<FeatureMesh> {
    const body = (await request(this.baseUrl, "GET", `/sessions/${this.sessionId}/mesh`)) as {
      vertices: Parameters<typeof fromPayload>[0];
      features: Parameters<typeof fromPayload>[0];
      feature_dim: number;
    };
    const vertices = fromPayload(body.vertices);
    return {
      vertices,
      features: fromPayload(body.features),
      vertexCount: vertices.length / 3,
      featureDim: body.feature_dim,
    };
  }

  async close(): Promise<void> {
    await request(this.baseUrl, "DELETE", `/sessions/${this.sessionId}`);
  }
}

export async function serviceHealthy(baseUrl: string): Promise<boolean> {
  try {
    const body = (await request(baseUrl, "GET", "/health")) as { status?: string };
    return body.status === "ok";
  } catch {
    return false;
  }
}
