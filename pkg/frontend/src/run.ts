import { spawn } from "node:child_process";

import { CliError } from "./errors.js";

export interface CliResult {
  status: number;
  stdout: string;
  stderr: string;
}

function spawnOnce(cmd: string, args: string[]): Promise<CliResult> {
  return new Promise((resolve, reject) => {
    const child = spawn(cmd, args, { stdio: ["ignore", "pipe", "pipe"] });
    let stdout = "";
    let stderr = "";
    child.stdout.on("data", (c) => (stdout += c));
    child.stderr.on("data", (c) => (stderr += c));
    child.on("error", reject);
    child.on("close", (status) => resolve({ status: status ?? -1, stdout, stderr }));
  });
}

/**
 * Run the voxeval CLI and capture its output.
 *
 * Resolution order: $VOXEVAL_BIN, the `voxeval` console script on PATH, then
 * `python3 -m voxeval`. Non-zero exits throw a CliError carrying stderr
 * unless `allowFailure` is set.
 */
export async function runVoxeval(
  args: string[],
  opts: { allowFailure?: boolean } = {},
): Promise<CliResult> {
  let result: CliResult;
  const override = process.env.VOXEVAL_BIN;
  if (override) {
    result = await spawnOnce(override, args);
  } else {
    try {
      result = await spawnOnce("voxeval", args);
    } catch (err) {
      if ((err as NodeJS.ErrnoException).code !== "ENOENT") {
        throw err;
      }
      result = await spawnOnce("python3", ["-m", "voxeval", ...args]);
    }
  }
  if (result.status !== 0 && !opts.allowFailure) {
    const detail = result.stderr.trim() || result.stdout.trim() || "(no output)";
    throw new CliError(`voxeval ${args[0]} exited with ${result.status}: ${detail}`, result.status, result.stderr);
  }
  return result;
}
