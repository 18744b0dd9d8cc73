import { ValidationError } from "./errors.js";
import { Volume, vidx } from "./volume.js";

/**
 * binvox encoder for occupancy grids, used to feed model files to the
 * dataset-building CLI. Voxels are stored x-major, then z, with y fastest;
 * the payload is (value, count) byte pairs with runs capped at 255.
 */
export function writeBinvox(v: Volume, translate: [number, number, number] = [0, 0, 0], scale = 1): Buffer {
  if (v.dims.length !== 3) {
    throw new ValidationError("binvox stores single-channel 3D grids");
  }
  const [w, h, d] = v.dims;
  const flat = new Uint8Array(w * h * d);
  let k = 0;
  for (let x = 0; x < w; x++) {
    for (let z = 0; z < d; z++) {
      for (let y = 0; y < h; y++) {
        const val = v.data[vidx(v.dims, x, y, z)];
        if (val !== 0 && val !== 1) {
          throw new ValidationError("binvox occupancy values must be 0 or 1");
        }
        flat[k++] = val;
      }
    }
  }
  const header = Buffer.from(
    `#binvox 1\ndim ${w} ${h} ${d}\ntranslate ${translate[0]} ${translate[1]} ${translate[2]}\nscale ${scale}\ndata\n`,
    "ascii",
  );
  const pairs: number[] = [];
  let run = 1;
  for (let i = 1; i <= flat.length; i++) {
    if (i < flat.length && flat[i] === flat[i - 1] && run < 255) {
      run++;
      continue;
    }
    pairs.push(flat[i - 1], run);
    run = 1;
  }
  return Buffer.concat([header, Buffer.from(pairs)]);
}
