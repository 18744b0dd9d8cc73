import { defineConfig } from "vitest/config";

// each CLI-backed test spawns python subprocesses; keep files sequential and
// give the spawning tests room on a loaded single-core box
export default defineConfig({
  test: {
    testTimeout: 180_000,
    hookTimeout: 180_000,
    fileParallelism: false,
  },
});
