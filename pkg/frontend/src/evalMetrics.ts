import { mkdir, mkdtemp, readFile, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { configArgs, EvalOptions } from "./config.js";
import { CliError, ValidationError } from "./errors.js";
import { runVoxeval } from "./run.js";
import { writeSev } from "./sev.js";
import { Volume, sameDims } from "./volume.js";

export interface MetricEntry {
  value: number;
  per_sample?: number[];
  [key: string]: unknown;
}

export interface EvalReport {
  config: Record<string, unknown>;
  dataset: string;
  n_samples: number;
  n_evaluated: number;
  sample_ids: string[];
  metrics: Record<string, MetricEntry>;
  exclusions: { id: string; reason: string }[];
  errors: { id: string; kind: string; detail?: string }[];
  timing: Record<string, unknown>;
}

const ID_RE = /^[\w.-]+$/;

/**
 * Score saliency volumes against ground-truth masks.
 *
 * The pairs are staged as a temporary dataset and handed to `voxeval eval`,
 * so the numbers are the CLI's own, bit for bit. Per-sample problems
 * (saliency out of range, empty mask) come back inside the report's
 * errors/exclusions lists, exactly as the CLI records them; the call only
 * throws when no report can be produced at all.
 *
 * `orders` are the slab positions mass concentration needs; `ids` name the
 * samples in the report (and the staged files, so they must be plain
 * path-safe tokens); both default like the CLI does (index order, zero-padded
 * ids).
 */
export async function evalMetrics(
  saliencies: Volume[],
  masks: Volume[],
  config: EvalOptions = {},
  orders?: number[],
  ids?: string[],
): Promise<EvalReport> {
  if (saliencies.length !== masks.length) {
    throw new ValidationError("saliencies and masks must have equal length");
  }
  if (saliencies.length === 0) {
    throw new ValidationError("no samples given");
  }
  if (orders !== undefined && orders.length !== saliencies.length) {
    throw new ValidationError("orders must match saliencies in length");
  }
  if (ids !== undefined) {
    if (ids.length !== saliencies.length) {
      throw new ValidationError("ids must match saliencies in length");
    }
    const bad = ids.filter((s) => !ID_RE.test(s));
    if (bad.length > 0) {
      throw new ValidationError(`ids must be path-safe tokens, got ${JSON.stringify(bad[0])}`);
    }
    if (new Set(ids).size !== ids.length) {
      throw new ValidationError("ids must be unique");
    }
  }
  for (let i = 0; i < saliencies.length; i++) {
    if (!sameDims(saliencies[i].dims, masks[i].dims)) {
      throw new ValidationError(
        `sample ${i}: saliency dims [${saliencies[i].dims}] do not match mask dims [${masks[i].dims}]`,
      );
    }
  }
  const args = configArgs(config as Record<string, unknown>); // reject bad keys before any I/O

  const root = await mkdtemp(join(tmpdir(), "voxeval-eval-"));
  try {
    const ds = join(root, "dataset");
    const sal = join(root, "saliency");
    await mkdir(join(ds, "masks"), { recursive: true });
    await mkdir(sal, { recursive: true });
    const entries = [];
    for (let i = 0; i < saliencies.length; i++) {
      const sid = ids !== undefined ? ids[i] : String(i).padStart(5, "0");
      const maskRel = `masks/${sid}.sev`;
      await writeFile(join(ds, maskRel), writeSev(masks[i]));
      await writeFile(join(sal, `${sid}.sev`), writeSev(saliencies[i]));
      const entry: Record<string, unknown> = {
        id: sid,
        label: 0,
        split: "test",
        positive: true,
        mask: maskRel,
      };
      if (orders !== undefined) {
        entry.order = orders[i];
      }
      entries.push(entry);
    }
    const manifest = {
      name: "in-memory",
      seed: 0,
      classes: [],
      samples: entries,
      skipped: [],
    };
    await writeFile(join(ds, "manifest.json"), JSON.stringify(manifest, null, 2) + "\n");

    const reportPath = join(root, "report.json");
    const res = await runVoxeval(
      ["eval", "--manifest", ds, "--saliency-dir", sal, "--format", "json", "--output", reportPath, ...args],
      { allowFailure: true }, // a non-zero exit with a report just means per-sample errors
    );
    let text: string;
    try {
      text = await readFile(reportPath, "utf8");
    } catch {
      const detail = res.stderr.trim() || res.stdout.trim() || "(no output)";
      throw new CliError(`voxeval eval exited with ${res.status}: ${detail}`, res.status, res.stderr);
    }
    return JSON.parse(text) as EvalReport;
  } finally {
    await rm(root, { recursive: true, force: true });
  }
}
