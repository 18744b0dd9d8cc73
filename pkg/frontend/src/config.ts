import { ValidationError } from "./errors.js";

/**
 * Evaluation settings, one key per CLI flag (same names, same value
 * vocabulary). List values may be given as arrays or comma-joined strings.
 */
export interface EvalOptions {
  metrics?: string | string[];
  tau_grid?: string;
  delta?: number | number[] | string;
  connectivity?: 6 | 26;
  slice_axis?: 0 | 1 | 2;
  seed?: number;
  workers?: number;
  pooled_ap?: boolean;
  strict?: boolean;
}

const FLAGS: Record<string, string> = {
  metrics: "--metrics",
  tau_grid: "--tau-grid",
  delta: "--delta",
  connectivity: "--connectivity",
  slice_axis: "--slice-axis",
  seed: "--seed",
  workers: "--workers",
  pooled_ap: "--pooled-ap",
  strict: "--strict",
};

/** Translate a config mapping into CLI arguments, rejecting unknown keys. */
export function configArgs(config: Record<string, unknown>): string[] {
  const unknown = Object.keys(config).filter((k) => !(k in FLAGS));
  if (unknown.length > 0) {
    throw new ValidationError(`unknown config keys [${unknown.sort().join(", ")}]`);
  }
  const args: string[] = [];
  for (const [key, flag] of Object.entries(FLAGS)) {
    const val = config[key];
    if (val === undefined || val === null) {
      continue;
    }
    if (key === "pooled_ap" || key === "strict") {
      if (val) {
        args.push(flag);
      }
      continue;
    }
    args.push(flag, Array.isArray(val) ? val.join(",") : String(val));
  }
  return args;
}
