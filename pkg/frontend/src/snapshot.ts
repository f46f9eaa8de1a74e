/**
 * Reader for serialized reconstruction snapshots:
 *   magic "MMAP" | u32 version | f32 voxel_size | u32 feature_dim |
 *   u64 vertex_count | f32 points[N*3] | f32 features[N*f]
 */

import { readFileSync } from "node:fs";

import { SnapshotFormatError } from "./errors";

export interface Snapshot {
  vertices: Float32Array;
  features: Float32Array;
  vertexCount: number;
  featureDim: number;
  voxelSizeM: number;
}

export function load_snapshot(path: string): Snapshot {
  const raw = readFileSync(path);
  if (raw.length < 24 || raw.toString("ascii", 0, 4) !== "MMAP") {
    throw new SnapshotFormatError(`bad snapshot magic in ${path}`);
  }
  const version = raw.readUInt32LE(4);
  if (version !== 1) {
    throw new SnapshotFormatError(`unsupported snapshot version ${version}`);
  }
  const voxelSizeM = raw.readFloatLE(8);
  const featureDim = raw.readUInt32LE(12);
  const vertexCount = Number(raw.readBigUInt64LE(16));
  const pointsBytes = vertexCount * 3 * 4;
  const featuresBytes = vertexCount * featureDim * 4;
  if (raw.length !== 24 + pointsBytes + featuresBytes) {
    throw new SnapshotFormatError(
      `snapshot is ${raw.length} bytes, header requires ${24 + pointsBytes + featuresBytes}`
    );
  }
  const body = Buffer.from(raw.subarray(24)); // aligned copy
  return {
    vertices: new Float32Array(body.buffer, body.byteOffset, vertexCount * 3),
    features: new Float32Array(body.buffer, body.byteOffset + pointsBytes, vertexCount * featureDim),
    vertexCount,
    featureDim,
    voxelSizeM,
  };
}
