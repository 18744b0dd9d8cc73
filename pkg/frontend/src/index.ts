export { CliError, FormatError, ValidationError } from "./errors.js";
export { sameDims, vidx, volume, voxelCount, zeros } from "./volume.js";
export type { Volume, VolumeDtype } from "./volume.js";
export { loadSev, readSev, saveSev, writeSev } from "./sev.js";
export { writeBinvox } from "./binvox.js";
export { configArgs } from "./config.js";
export type { EvalOptions } from "./config.js";
export { runVoxeval } from "./run.js";
export type { CliResult } from "./run.js";
export { evalMetrics } from "./evalMetrics.js";
export type { EvalReport, MetricEntry } from "./evalMetrics.js";
export { preparePairs } from "./preparePairs.js";
export type { PairSample, PairsDataset } from "./preparePairs.js";
