import { ValidationError } from "./errors.js";

export type VolumeDtype = "u8" | "f32";

/**
 * Dense voxel volume in C order (last axis fastest): element (x, y, z) of a
 * [w, h, d] volume lives at (x * h + y) * d + z. 4D volumes add a trailing
 * channel axis.
 */
export interface Volume {
  dims: number[];
  dtype: VolumeDtype;
  data: Uint8Array | Float32Array;
  /** set when construction had to copy the caller's buffer */
  copied?: boolean;
}

export function voxelCount(dims: number[]): number {
  return dims.reduce((a, b) => a * b, 1);
}

function checkDims(dims: number[]): void {
  if (dims.length !== 3 && dims.length !== 4) {
    throw new ValidationError(`volumes are 3D or 4D, got ${dims.length} dims`);
  }
  for (const d of dims) {
    if (!Number.isInteger(d) || d < 1) {
      throw new ValidationError(`dimensions must be positive integers, got [${dims}]`);
    }
  }
}

/**
 * Wrap a buffer as a Volume. A typed array of the matching element type is
 * referenced zero-copy; plain number arrays (or a dtype override that differs
 * from the buffer's type) are copied and the result carries `copied: true`.
 */
export function volume(
  dims: number[],
  data: Uint8Array | Float32Array | ArrayLike<number>,
  dtype?: VolumeDtype,
): Volume {
  checkDims(dims);
  const n = voxelCount(dims);
  if (data.length !== n) {
    throw new ValidationError(`buffer holds ${data.length} values, dims [${dims}] want ${n}`);
  }
  if (data instanceof Uint8Array && (dtype === undefined || dtype === "u8")) {
    return { dims: dims.slice(), dtype: "u8", data };
  }
  if (data instanceof Float32Array && (dtype === undefined || dtype === "f32")) {
    return { dims: dims.slice(), dtype: "f32", data };
  }
  const want = dtype ?? "f32";
  const copy = want === "u8" ? Uint8Array.from(data as ArrayLike<number>) : Float32Array.from(data as ArrayLike<number>);
  return { dims: dims.slice(), dtype: want, data: copy, copied: true };
}

/** Fresh all-zero volume. */
export function zeros(dims: number[], dtype: VolumeDtype = "u8"): Volume {
  checkDims(dims);
  const n = voxelCount(dims);
  const data = dtype === "u8" ? new Uint8Array(n) : new Float32Array(n);
  return { dims: dims.slice(), dtype, data };
}

/** Flat index of (x, y, z) in a 3D volume. */
export function vidx(dims: number[], x: number, y: number, z: number): number {
  return (x * dims[1] + y) * dims[2] + z;
}

export function sameDims(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((v, i) => v === b[i]);
}
