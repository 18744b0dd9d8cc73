import { mkdir, mkdtemp, readFile, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { writeBinvox } from "./binvox.js";
import { ValidationError } from "./errors.js";
import { runVoxeval } from "./run.js";
import { readSev } from "./sev.js";
import { Volume } from "./volume.js";

export interface PairSample {
  id: string;
  /** position of the target in the input volumes list */
  index: number;
  label: number;
  /** 0 = target occupies the first half of axis 0, 1 = the second */
  order: number;
  split: string;
  volume: Volume;
  mask: Volume;
}

export interface PairsDataset {
  name: string;
  seed: number;
  classes: string[];
  samples: PairSample[];
  skipped: { id: string; reason: string }[];
}

/**
 * Build the two-object pairs dataset from in-memory occupancy grids.
 *
 * Volumes labeled 0 or 1 are targets; any other label joins the distractor
 * pool. The grids are staged as model files for `voxeval prepare`, so
 * pairing and stacking order are the CLI's own seeded draws: targets are
 * processed class-0 block first, then class-1, ascending input index within
 * each block. Zero-occupancy or otherwise unusable inputs end up in
 * `skipped`; each class needs at least one usable target and the pool at
 * least one member.
 */
export async function preparePairs(
  volumes: Volume[],
  labels: number[],
  seed = 0,
): Promise<PairsDataset> {
  if (volumes.length !== labels.length) {
    throw new ValidationError("volumes and labels must have equal length");
  }
  if (volumes.length === 0) {
    throw new ValidationError("no volumes given");
  }
  const root = await mkdtemp(join(tmpdir(), "voxeval-pairs-"));
  try {
    const classDirs = [join(root, "c0"), join(root, "c1")];
    const noiseDir = join(root, "noise");
    await mkdir(classDirs[0]);
    await mkdir(classDirs[1]);
    await mkdir(noiseDir);
    for (let i = 0; i < volumes.length; i++) {
      const dir = labels[i] === 0 || labels[i] === 1 ? classDirs[labels[i]] : noiseDir;
      // zero-padded input index: sorted directory order == input order
      await writeFile(join(dir, `${String(i).padStart(5, "0")}.binvox`), writeBinvox(volumes[i]));
    }
    const out = join(root, "out");
    await runVoxeval([
      "prepare",
      "--dataset", "shapenet-pairs",
      "--input", classDirs[0], classDirs[1],
      "--noise", noiseDir,
      "--output", out,
      "--seed", String(seed),
    ]);
    const manifest = JSON.parse(await readFile(join(out, "manifest.json"), "utf8"));
    const samples: PairSample[] = [];
    for (const entry of manifest.samples) {
      samples.push({
        id: entry.id,
        index: parseInt(entry.id.slice(entry.id.lastIndexOf("_") + 1), 10),
        label: entry.label,
        order: entry.order,
        split: entry.split,
        volume: readSev(await readFile(join(out, entry.volume))),
        mask: readSev(await readFile(join(out, entry.mask))),
      });
    }
    return {
      name: manifest.name,
      seed: manifest.seed,
      classes: manifest.classes,
      samples,
      skipped: manifest.skipped,
    };
  } finally {
    await rm(root, { recursive: true, force: true });
  }
}
