import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // one worker: the tests share a fixture server and run as a sequence
    fileParallelism: false,
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
