import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // every binding call spawns the engine CLI
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
