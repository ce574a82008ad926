import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["test/**/*.test.ts"],
    testTimeout: 30_000,
    // the parity suite owns a live service; keep files sequential
    fileParallelism: false,
  },
});
