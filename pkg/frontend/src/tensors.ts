/**
 * Dense-array plumbing shared by the client and the fixture tooling.
 *
 * Wire payloads are little-endian float32 bytes in base64 with an explicit
 * shape. TensorFile is the on-disk format the batch pipeline ingests:
 *   magic "FTNS" | u32 version | u32 dtype (0=f32, 1=u16) | u32 ndim |
 *   u64 dims[ndim] | C-order little-endian payload
 */

import { readFileSync, writeFileSync } from "node:fs";

import { ShapeError } from "./errors";

export interface TensorPayload {
  shape: number[];
  dtype: "f32";
  data_b64: string;
}

export function toPayload(data: Float32Array, shape: number[]): TensorPayload {
  const count = shape.reduce((a, b) => a * b, 1);
  if (data.length !== count) {
    throw new ShapeError(
      `tensor data has ${data.length} elements, shape [${shape.join(", ")}] requires ${count}`
    );
  }
  const bytes = Buffer.from(data.buffer, data.byteOffset, data.byteLength);
  return { shape: [...shape], dtype: "f32", data_b64: bytes.toString("base64") };
}

export function fromPayload(payload: TensorPayload): Float32Array {
  const bytes = Buffer.from(payload.data_b64, "base64");
  const count = payload.shape.reduce((a, b) => a * b, 1);
  if (bytes.length !== count * 4) {
    throw new ShapeError(
      `payload is ${bytes.length} bytes, shape [${payload.shape.join(", ")}] requires ${count * 4}`
    );
  }
  return new Float32Array(bytes.buffer, bytes.byteOffset, count);
}

const TENSOR_MAGIC = "FTNS";

export function writeTensorFile(path: string, data: Float32Array, shape: number[]): void {
  const count = shape.reduce((a, b) => a * b, 1);
  if (data.length !== count) {
    throw new ShapeError(
      `tensor data has ${data.length} elements, shape [${shape.join(", ")}] requires ${count}`
    );
  }
  const header = Buffer.alloc(16 + 8 * shape.length);
  header.write(TENSOR_MAGIC, 0, "ascii");
  header.writeUInt32LE(1, 4); // version
  header.writeUInt32LE(0, 8); // dtype f32
  header.writeUInt32LE(shape.length, 12);
  shape.forEach((dim, i) => header.writeBigUInt64LE(BigInt(dim), 16 + 8 * i));
  const payload = Buffer.from(data.buffer, data.byteOffset, data.byteLength);
  writeFileSync(path, Buffer.concat([header, payload]));
}

export function readTensorFile(path: string): { shape: number[]; data: Float32Array } {
  const raw = readFileSync(path);
  if (raw.length < 16 || raw.toString("ascii", 0, 4) !== TENSOR_MAGIC) {
    throw new ShapeError(`not a tensor file: ${path}`);
  }
  const dtype = raw.readUInt32LE(8);
  if (dtype !== 0) {
    throw new ShapeError(`only f32 tensors supported here, got dtype code ${dtype}`);
  }
  const ndim = raw.readUInt32LE(12);
  const shape: number[] = [];
  for (let i = 0; i < ndim; i++) {
    shape.push(Number(raw.readBigUInt64LE(16 + 8 * i)));
  }
  const count = shape.reduce((a, b) => a * b, 1);
  const body = raw.subarray(16 + 8 * ndim);
  if (body.length !== count * 4) {
    throw new ShapeError(`tensor payload length mismatch in ${path}`);
  }
  const copy = Buffer.from(body); // align for the typed-array view
  return { shape, data: new Float32Array(copy.buffer, copy.byteOffset, count) };
}
