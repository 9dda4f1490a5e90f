import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // the live suite drives a real-time server session
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
