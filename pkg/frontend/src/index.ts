export {
  Mapper,
  serviceHealthy,
  type DepthFrame,
  type FeatureFrame,
  type FeatureMesh,
  type IntegrationStats,
  type Intrinsics,
  type MapperOptions,
  type MeshUpdateStats,
  type Pose,
} from "./client";
export { load_snapshot, type Snapshot } from "./snapshot";
export { fromPayload, readTensorFile, toPayload, writeTensorFile, type TensorPayload } from "./tensors";
export { ServiceError, ShapeError, SnapshotFormatError } from "./errors";
