import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the live test builds a pipeline run before serving
    testTimeout: 90_000,
    hookTimeout: 90_000,
  },
});
