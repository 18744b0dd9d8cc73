import { readFile, writeFile } from "node:fs/promises";

import { FormatError, ValidationError } from "./errors.js";
import { Volume, voxelCount } from "./volume.js";

/**
 * SEV container codec, byte-compatible with the voxeval CLI.
 *
 * Layout, all little-endian:
 *     magic   4 bytes  "SEV1"
 *     dtype   u8       0 = uint8, 1 = float32
 *     ndim    u8       3 or 4
 *     dims    u32 * ndim
 *     payload row-major (last axis fastest)
 */

const MAGIC = "SEV1";
const HOST_LE = new Uint8Array(new Uint32Array([1]).buffer)[0] === 1;

export function writeSev(v: Volume): Buffer {
  if (v.dims.length !== 3 && v.dims.length !== 4) {
    throw new ValidationError(`SEV stores 3D or 4D volumes, got ${v.dims.length}D`);
  }
  if (Math.min(...v.dims) < 1) {
    throw new ValidationError("SEV dimensions must all be >= 1");
  }
  if (v.data.length !== voxelCount(v.dims)) {
    throw new ValidationError(
      `volume buffer holds ${v.data.length} values, dims [${v.dims}] want ${voxelCount(v.dims)}`,
    );
  }
  const header = Buffer.alloc(6 + 4 * v.dims.length);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt8(v.dtype === "u8" ? 0 : 1, 4);
  header.writeUInt8(v.dims.length, 5);
  v.dims.forEach((d, i) => header.writeUInt32LE(d, 6 + 4 * i));
  let payload = Buffer.from(v.data.buffer, v.data.byteOffset, v.data.byteLength);
  if (v.dtype === "f32" && !HOST_LE) {
    payload = Buffer.from(payload).swap32();
  }
  return Buffer.concat([header, payload]);
}

export function readSev(data: Buffer | Uint8Array): Volume {
  const buf = Buffer.isBuffer(data) ? data : Buffer.from(data.buffer, data.byteOffset, data.byteLength);
  if (buf.length < 6) {
    throw new FormatError("truncated SEV header");
  }
  if (buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new FormatError(`bad SEV magic ${JSON.stringify(buf.toString("latin1", 0, 4))}`);
  }
  const code = buf.readUInt8(4);
  const ndim = buf.readUInt8(5);
  if (code !== 0 && code !== 1) {
    throw new FormatError(`unsupported SEV dtype code ${code}`);
  }
  if (ndim !== 3 && ndim !== 4) {
    throw new FormatError(`unsupported SEV rank ${ndim}`);
  }
  const headerLen = 6 + 4 * ndim;
  if (buf.length < headerLen) {
    throw new FormatError("truncated SEV dimension list");
  }
  const dims: number[] = [];
  for (let i = 0; i < ndim; i++) {
    dims.push(buf.readUInt32LE(6 + 4 * i));
  }
  if (Math.min(...dims) < 1) {
    throw new FormatError("SEV dimensions must all be >= 1");
  }
  const itemsize = code === 0 ? 1 : 4;
  const expected = voxelCount(dims) * itemsize;
  if (buf.length - headerLen !== expected) {
    throw new FormatError(
      `SEV payload length ${buf.length - headerLen} does not match dims [${dims}]`,
    );
  }
  // copy out of the (possibly pooled, possibly unaligned) file buffer
  const payload = new Uint8Array(buf.subarray(headerLen)).slice();
  if (code === 0) {
    return { dims, dtype: "u8", data: payload };
  }
  const bytes = HOST_LE ? payload : Buffer.from(payload.buffer).swap32();
  return { dims, dtype: "f32", data: new Float32Array(bytes.buffer, 0, expected / 4) };
}

export async function saveSev(path: string, v: Volume): Promise<void> {
  await writeFile(path, writeSev(v));
}

export async function loadSev(path: string): Promise<Volume> {
  return readSev(await readFile(path));
}
