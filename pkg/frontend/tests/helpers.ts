import { Volume, vidx, volume, zeros } from "../src/index.js";

/** Small deterministic PRNG so fixtures are stable across runs. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Random solid cuboid occupancy grid (always at least one voxel). */
export function blobMask(dims: number[], rand: () => number): Volume {
  const v = zeros(dims, "u8");
  const lo: number[] = [];
  const hi: number[] = [];
  for (const d of dims) {
    const a = Math.floor(rand() * (d - 1));
    const b = a + 1 + Math.floor(rand() * (d - a - 1));
    lo.push(a);
    hi.push(Math.min(b, d));
  }
  for (let x = lo[0]; x < hi[0]; x++) {
    for (let y = lo[1]; y < hi[1]; y++) {
      for (let z = lo[2]; z < hi[2]; z++) {
        v.data[vidx(dims, x, y, z)] = 1;
      }
    }
  }
  return v;
}

/** Random 0/1 grid with roughly the given fill rate (never all-zero). */
export function noiseGrid(dims: number[], rand: () => number, fill = 0.3): Volume {
  const v = zeros(dims, "u8");
  for (let i = 0; i < v.data.length; i++) {
    v.data[i] = rand() < fill ? 1 : 0;
  }
  if (v.data.every((b) => b === 0)) {
    v.data[0] = 1;
  }
  return v;
}

/** Float32 copy of a mask, for use as a perfect saliency map. */
export function asSaliency(mask: Volume): Volume {
  return volume(mask.dims, Float32Array.from(mask.data), "f32");
}

/**
 * Structural equality with Object.is on leaf numbers, i.e. bitwise equality
 * for every float in the tree.
 */
export function deepBitwiseEqual(a: unknown, b: unknown): boolean {
  if (typeof a === "number" && typeof b === "number") {
    return Object.is(a, b);
  }
  if (Array.isArray(a) && Array.isArray(b)) {
    return a.length === b.length && a.every((v, i) => deepBitwiseEqual(v, b[i]));
  }
  if (a !== null && b !== null && typeof a === "object" && typeof b === "object") {
    const ka = Object.keys(a as object).sort();
    const kb = Object.keys(b as object).sort();
    if (ka.length !== kb.length || ka.some((k, i) => k !== kb[i])) {
      return false;
    }
    return ka.every((k) =>
      deepBitwiseEqual((a as Record<string, unknown>)[k], (b as Record<string, unknown>)[k]),
    );
  }
  return a === b;
}
