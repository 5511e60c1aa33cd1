import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // The replay test boots the Python server and fits a real dataset.
    testTimeout: 90_000,
    hookTimeout: 90_000,
  },
});
